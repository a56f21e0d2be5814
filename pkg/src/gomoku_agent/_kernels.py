"""Hot board kernels: win scanning and pattern scoring.

These inner loops dominate self-play and fuzz-test runtime, so they are
JIT-compiled with numba by default. Set ``GOMOKU_PURE_NUMPY=1`` to force
the pure numpy/python fallback path; both paths produce bit-identical
results (same float operation order), the fallback is just slower. See
``benchmarks/bench_kernels.py`` for a comparison.

Boards enter as read-only int8 arrays of shape (size, size) with entries
in {-1, 0, +1}. Scores leave as float64.
"""

from __future__ import annotations

import os

import numpy as np

# The four scan directions: right, down, down-right, down-left.
_DIR_R = np.array([0, 1, 1, 1], dtype=np.int64)
_DIR_C = np.array([1, 0, 1, -1], dtype=np.int64)

# Pattern weights for a contiguous run created by placing a stone.
# "Open" means both cells beyond the run ends are empty, "closed" means
# exactly one is. Runs of length 1, and dead runs shorter than five,
# are worth nothing. Exact values only need to preserve the ordering
# five > open four > closed four > open three > ...
WEIGHT_FIVE = 100_000.0
WEIGHT_OPEN_FOUR = 10_000.0
WEIGHT_CLOSED_FOUR = 2_500.0
WEIGHT_OPEN_THREE = 2_000.0
WEIGHT_CLOSED_THREE = 400.0
WEIGHT_OPEN_TWO = 100.0
WEIGHT_CLOSED_TWO = 20.0


def _run_weight(length, open_ends):
    if length >= 5:
        return WEIGHT_FIVE
    if open_ends == 0:
        return 0.0
    if length == 4:
        return WEIGHT_OPEN_FOUR if open_ends == 2 else WEIGHT_CLOSED_FOUR
    if length == 3:
        return WEIGHT_OPEN_THREE if open_ends == 2 else WEIGHT_CLOSED_THREE
    if length == 2:
        return WEIGHT_OPEN_TWO if open_ends == 2 else WEIGHT_CLOSED_TWO
    return 0.0


def _attack_raw(cells, row, col, side):
    """Sum of pattern weights `side` would create by placing at (row, col).

    The cell itself is assumed empty; each of the four directions
    contributes the weight of the contiguous run through (row, col).
    """
    size = cells.shape[0]
    total = 0.0
    for k in range(4):
        dr = _DIR_R[k]
        dc = _DIR_C[k]
        length = 1
        r = row + dr
        c = col + dc
        while 0 <= r < size and 0 <= c < size and cells[r, c] == side:
            length += 1
            r += dr
            c += dc
        open_fwd = 1 if (0 <= r < size and 0 <= c < size and cells[r, c] == 0) else 0
        r = row - dr
        c = col - dc
        while 0 <= r < size and 0 <= c < size and cells[r, c] == side:
            length += 1
            r -= dr
            c -= dc
        open_back = 1 if (0 <= r < size and 0 <= c < size and cells[r, c] == 0) else 0
        total += _run_weight(length, open_fwd + open_back)
    return total


def _position_raw(cells, row, col, side, defense_weight):
    """Raw desirability of placing `side` at (row, col): attack patterns,
    discounted patterns the opponent would complete there, and a
    centrality bonus of size minus Chebyshev distance to board center."""
    att = _attack_raw(cells, row, col, side)
    dfs = _attack_raw(cells, row, col, -side)
    size = cells.shape[0]
    half = (size - 1) / 2.0
    d_r = abs(row - half)
    d_c = abs(col - half)
    cheb = d_r if d_r > d_c else d_c
    return att + defense_weight * dfs + (size - cheb)


def _raw_grid(cells, side, defense_weight):
    """Raw score of every empty cell for `side`; occupied cells get -1."""
    size = cells.shape[0]
    out = np.full((size, size), -1.0)
    for r in range(size):
        for c in range(size):
            if cells[r, c] == 0:
                out[r, c] = _position_raw(cells, r, c, side, defense_weight)
    return out


def _best_attack(cells, side):
    """Max attack weight `side` can realize with one stone (0 if board full)."""
    size = cells.shape[0]
    best = 0.0
    for r in range(size):
        for c in range(size):
            if cells[r, c] == 0:
                a = _attack_raw(cells, r, c, side)
                if a > best:
                    best = a
    return best


def _win_scan_loop(cells):
    """Find the first maximal run of length >= 5 in scan order.

    Returns (winner, row, col, dr, dc, length); winner is 0 when no run
    exists. Scan order: cells row-major, directions right / down /
    down-right / down-left, considering only run-start cells, so the
    result is deterministic for a given grid.
    """
    size = cells.shape[0]
    for r in range(size):
        for c in range(size):
            v = cells[r, c]
            if v == 0:
                continue
            for k in range(4):
                dr = _DIR_R[k]
                dc = _DIR_C[k]
                pr = r - dr
                pc = c - dc
                if 0 <= pr < size and 0 <= pc < size and cells[pr, pc] == v:
                    continue  # not the start of the run
                length = 1
                nr = r + dr
                nc = c + dc
                while 0 <= nr < size and 0 <= nc < size and cells[nr, nc] == v:
                    length += 1
                    nr += dr
                    nc += dc
                if length >= 5:
                    return int(v), r, c, int(dr), int(dc), length
    return 0, -1, -1, 0, 0, 0


def _has_five_numpy(cells):
    """Vectorized detection: does any monochrome 5-window exist?"""
    for v in (1, -1):
        m = cells == v
        if not m.any():
            continue
        horiz = m[:, :-4] & m[:, 1:-3] & m[:, 2:-2] & m[:, 3:-1] & m[:, 4:]
        vert = m[:-4, :] & m[1:-3, :] & m[2:-2, :] & m[3:-1, :] & m[4:, :]
        diag = m[:-4, :-4] & m[1:-3, 1:-3] & m[2:-2, 2:-2] & m[3:-1, 3:-1] & m[4:, 4:]
        anti = m[4:, :-4] & m[3:-1, 1:-3] & m[2:-2, 2:-2] & m[1:-3, 3:-1] & m[:-4, 4:]
        if horiz.any() or vert.any() or diag.any() or anti.any():
            return True
    return False


def _win_scan_numpy(cells):
    # Fast vectorized no-win path; fall back to the shared locating loop
    # only when a five exists, so both backends report the same run.
    if _has_five_numpy(cells):
        return _win_scan_loop(cells)
    return 0, -1, -1, 0, 0, 0


# References captured before any JIT rebinding, so the pure path below
# never routes through compiled code even when numba is active.
_py_attack_raw = _attack_raw
_py_win_scan_loop = _win_scan_loop


class _PurePath:
    """Uncompiled implementations, addressable for equivalence tests and
    the kernel benchmark regardless of the active backend."""

    @staticmethod
    def attack_raw(cells, row, col, side):
        return _py_attack_raw(cells, row, col, side)

    @staticmethod
    def position_raw(cells, row, col, side, defense_weight):
        att = _py_attack_raw(cells, row, col, side)
        dfs = _py_attack_raw(cells, row, col, -side)
        size = cells.shape[0]
        half = (size - 1) / 2.0
        d_r = abs(row - half)
        d_c = abs(col - half)
        cheb = d_r if d_r > d_c else d_c
        return att + defense_weight * dfs + (size - cheb)

    @staticmethod
    def raw_grid(cells, side, defense_weight):
        size = cells.shape[0]
        out = np.full((size, size), -1.0)
        for r in range(size):
            for c in range(size):
                if cells[r, c] == 0:
                    out[r, c] = _PurePath.position_raw(cells, r, c, side, defense_weight)
        return out

    @staticmethod
    def best_attack(cells, side):
        size = cells.shape[0]
        best = 0.0
        for r in range(size):
            for c in range(size):
                if cells[r, c] == 0:
                    a = _py_attack_raw(cells, r, c, side)
                    if a > best:
                        best = a
        return best

    @staticmethod
    def win_scan(cells):
        if _has_five_numpy(cells):
            return _py_win_scan_loop(cells)
        return 0, -1, -1, 0, 0, 0


PURE = _PurePath()


def _numba_enabled():
    flag = os.environ.get("GOMOKU_PURE_NUMPY", "").strip().lower()
    if flag in {"1", "true", "yes", "on"}:
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


if _numba_enabled():
    from numba import njit

    KERNEL_BACKEND = "numba"
    _run_weight = njit(cache=True, inline="always")(_run_weight)
    _attack_raw = njit(cache=True)(_attack_raw)
    _position_raw = njit(cache=True)(_position_raw)
    _raw_grid = njit(cache=True)(_raw_grid)
    _best_attack = njit(cache=True)(_best_attack)
    win_scan = njit(cache=True)(_win_scan_loop)
else:
    KERNEL_BACKEND = "numpy"
    win_scan = _win_scan_numpy


def attack_raw(cells: np.ndarray, row: int, col: int, side: int) -> float:
    return float(_attack_raw(cells, row, col, side))


def position_raw(
    cells: np.ndarray, row: int, col: int, side: int, defense_weight: float
) -> float:
    return float(_position_raw(cells, row, col, side, defense_weight))


def raw_grid(cells: np.ndarray, side: int, defense_weight: float) -> np.ndarray:
    return _raw_grid(cells, side, defense_weight)


def best_attack(cells: np.ndarray, side: int) -> float:
    return float(_best_attack(cells, side))


def warmup(size: int = 15) -> None:
    """Trigger JIT compilation of all kernels (no-op on the numpy path)."""
    cells = np.zeros((size, size), dtype=np.int8)
    cells[0, 0] = 1
    win_scan(cells)
    raw_grid(cells, 1, 0.8)
    best_attack(cells, -1)
    position_raw(cells, 1, 1, 1, 0.8)
