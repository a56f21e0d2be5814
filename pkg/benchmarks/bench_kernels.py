#!/usr/bin/env python3
"""Benchmark the numba-compiled board kernels against the pure fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--boards N] [--size S]

The active backend is chosen at import time (GOMOKU_PURE_NUMPY=1 forces
the fallback for the whole package); this script times both paths in one
process via the PURE namespace, which never routes through compiled code.
"""

import argparse
import time

import numpy as np

from gomoku_agent import _kernels
from gomoku_agent.engine import BLACK, Position, apply_move, game_status, new_board


def random_boards(n, size, seed=0):
    rng = np.random.default_rng(seed)
    boards = []
    for _ in range(n):
        board = new_board(size)
        player = BLACK
        for idx in rng.permutation(size * size)[: int(rng.integers(10, size * size))]:
            nxt = apply_move(board, Position(int(idx) // size, int(idx) % size), player)
            if game_status(nxt).over:
                break
            board = nxt
            player = -player
        boards.append(np.asarray(board.cells))
    return boards


def timeit(fn, reps=1):
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--boards", type=int, default=300)
    parser.add_argument("--size", type=int, default=15)
    args = parser.parse_args()

    print(f"active backend: {_kernels.KERNEL_BACKEND}")
    _kernels.warmup(args.size)
    boards = random_boards(args.boards, args.size)

    cases = {
        "win_scan": (
            lambda: [_kernels.win_scan(b) for b in boards],
            lambda: [_kernels.PURE.win_scan(b) for b in boards],
        ),
        "raw_grid": (
            lambda: [_kernels.raw_grid(b, 1, 0.8) for b in boards[:40]],
            lambda: [_kernels.PURE.raw_grid(b, 1, 0.8) for b in boards[:40]],
        ),
        "best_attack": (
            lambda: [_kernels.best_attack(b, -1) for b in boards[:40]],
            lambda: [_kernels.PURE.best_attack(b, -1) for b in boards[:40]],
        ),
    }

    print(f"{'kernel':<14}{'active':>12}{'pure':>12}{'speedup':>10}")
    for name, (active, pure) in cases.items():
        fast = timeit(active)
        slow = timeit(pure)
        print(f"{name:<14}{fast * 1e3:>10.1f}ms{slow * 1e3:>10.1f}ms{slow / fast:>9.1f}x")

    # sanity: both paths agree bit for bit
    for b in boards[:20]:
        assert tuple(_kernels.win_scan(b)) == tuple(_kernels.PURE.win_scan(b))
        assert (np.asarray(_kernels.raw_grid(b, 1, 0.8))
                == np.asarray(_kernels.PURE.raw_grid(b, 1, 0.8))).all()
    print("agreement check: identical results on sampled boards")


if __name__ == "__main__":
    main()
