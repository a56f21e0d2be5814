"""Legality-guaranteed move selection via local position evaluation.

A proposed candidate move may be illegal (occupied, out of bounds). We
grow a Chebyshev neighborhood around it until it contains at least one
legal cell, score every cell in that region (in parallel, since remote
scoring dominates the wall clock), and play the best-scoring legal cell.
The returned move is therefore always legal while still honoring the
candidate whenever it scores well.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .engine import Board, Position
from .evaluation import EvaluatorBackend, BoardFullError


class MoveSelectError(Exception):
    code = "move_select_error"


class AllScoresFailedError(MoveSelectError):
    code = "all_scores_failed"


@dataclass(frozen=True)
class LegalRegion:
    center: Position
    order: int  # smallest Chebyshev radius holding a legal cell
    positions: tuple[Position, ...]  # row-major order


@dataclass(frozen=True)
class ScoredPosition:
    position: Position
    score: float


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def legal_region(board: Board, center: Position) -> LegalRegion:
    """Smallest Chebyshev ball around `center` containing a legal cell.

    Order 1 is the 3x3 ball including the center itself, so a legal
    candidate is always a member of its own region.
    """
    center = Position(int(center[0]), int(center[1]))
    size = board.size
    row = min(max(center.row, 0), size - 1)
    col = min(max(center.col, 0), size - 1)
    max_order = max(row, size - 1 - row, col, size - 1 - col)
    for order in range(1, max_order + 1):
        r0, r1 = max(0, row - order), min(size - 1, row + order)
        c0, c1 = max(0, col - order), min(size - 1, col + order)
        found = [
            Position(r, c)
            for r in range(r0, r1 + 1)
            for c in range(c0, c1 + 1)
            if board.cells[r, c] == 0
        ]
        if found:
            return LegalRegion(center, order, tuple(found))
    raise BoardFullError("no legal position anywhere on the board")


def score_parallel(
    board: Board,
    positions,
    backend: EvaluatorBackend,
    player: int,
    workers: int = 1,
) -> list[ScoredPosition]:
    """Score every position with `backend`, fanning out over `workers`
    threads; output is sorted by score descending then row-major index,
    so it is identical for any worker count given a deterministic backend.

    A position whose scoring raises is dropped (the backend already
    retried per its own policy); if none survive, AllScoresFailed.
    """
    positions = [Position(int(p[0]), int(p[1])) for p in positions]
    if workers < 1:
        raise ValueError("workers must be >= 1")

    def score_one(pos: Position):
        try:
            return ScoredPosition(pos, float(backend.score_position(board, pos, player)))
        except Exception:
            return None

    if workers == 1 or len(positions) <= 1:
        results = [score_one(p) for p in positions]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(score_one, positions))

    scored = [s for s in results if s is not None]
    if not scored:
        raise AllScoresFailedError(f"all {len(positions)} scorings failed")
    size = board.size
    scored.sort(key=lambda s: (-s.score, s.position.row * size + s.position.col))
    return scored


def choose_move(
    board: Board,
    candidate: Position,
    backend: EvaluatorBackend,
    player: int,
    workers: int = 1,
) -> tuple[Position, list[ScoredPosition]]:
    """Turn a possibly-illegal candidate into a guaranteed-legal move.

    Returns the best-scoring cell of the candidate's legal region plus the
    full scored list for explanations and the UI.
    """
    region = legal_region(board, candidate)
    scored = score_parallel(board, region.positions, backend, player, workers)
    return scored[0].position, scored
