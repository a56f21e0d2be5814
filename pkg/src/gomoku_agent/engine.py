"""Gomoku rules engine: board state, move legality, win/draw detection.

Boards are immutable values: every mutation returns a fresh board and the
cell array of a live board is write-locked, so boards can be shared freely
across threads. Black (+1) always moves first; runs of five **or more**
stones win (freestyle rule); there are no forbidden moves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from . import _kernels

BLACK = 1
WHITE = -1

MIN_SIZE = 5
MAX_SIZE = 25
WIN_LENGTH = 5

IN_PROGRESS = "in_progress"
WON = "won"
DRAW = "draw"


class EngineError(Exception):
    """Base for rule violations; `code` feeds the service error mapping."""

    code = "engine_error"


class InvalidSizeError(EngineError):
    code = "invalid_size"


class OutOfBoundsError(EngineError):
    code = "out_of_bounds"


class OccupiedError(EngineError):
    code = "occupied"


class WrongTurnError(EngineError):
    code = "wrong_turn"


class GameOverError(EngineError):
    code = "game_over"


class Position(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class GameStatus:
    state: str  # one of IN_PROGRESS, WON, DRAW
    winner: int | None = None
    line: tuple[Position, ...] = ()

    @property
    def over(self) -> bool:
        return self.state != IN_PROGRESS


class Board:
    """15x15 (by default) grid plus the move history that produced it."""

    __slots__ = ("size", "cells", "history", "_status")

    def __init__(
        self,
        size: int,
        cells: np.ndarray,
        history: tuple[tuple[Position, int], ...],
        _status: GameStatus | None = None,
    ):
        self.size = size
        cells = np.ascontiguousarray(cells, dtype=np.int8)
        cells.flags.writeable = False
        self.cells = cells
        self.history = history
        self._status = _status

    @property
    def side_to_move(self) -> int:
        return BLACK if len(self.history) % 2 == 0 else WHITE

    def in_bounds(self, pos: Position) -> bool:
        return 0 <= pos.row < self.size and 0 <= pos.col < self.size

    def __repr__(self) -> str:
        return f"Board(size={self.size}, moves={len(self.history)})"

    def render(self) -> str:
        """Human-readable grid (X = black, O = white) for CLI replays."""
        glyphs = {0: ".", 1: "X", -1: "O"}
        header = "   " + " ".join(f"{c:2d}" for c in range(self.size))
        rows = [
            f"{r:2d}  " + "  ".join(glyphs[int(v)] for v in self.cells[r])
            for r in range(self.size)
        ]
        return "\n".join([header] + rows)


def new_board(size: int = 15) -> Board:
    if not isinstance(size, int) or not MIN_SIZE <= size <= MAX_SIZE:
        raise InvalidSizeError(f"board size must be in [{MIN_SIZE}, {MAX_SIZE}], got {size!r}")
    cells = np.zeros((size, size), dtype=np.int8)
    return Board(size, cells, (), GameStatus(IN_PROGRESS))


def apply_move(board: Board, pos: Position, player: int) -> Board:
    """Place `player`'s stone at `pos`, returning the successor board."""
    if player not in (BLACK, WHITE):
        raise WrongTurnError(f"player must be +1 or -1, got {player!r}")
    if game_status(board).over:
        raise GameOverError("game is already over")
    pos = Position(int(pos[0]), int(pos[1]))
    if not board.in_bounds(pos):
        raise OutOfBoundsError(f"{pos} outside {board.size}x{board.size} board")
    if player != board.side_to_move:
        raise WrongTurnError(f"it is not player {player}'s turn")
    if board.cells[pos.row, pos.col] != 0:
        raise OccupiedError(f"{pos} is already occupied")
    cells = np.array(board.cells)  # writable copy
    cells[pos.row, pos.col] = player
    return Board(board.size, cells, board.history + ((pos, player),))


def legal_positions(board: Board) -> list[Position]:
    """Every empty cell, in row-major order."""
    flat = np.flatnonzero(board.cells.ravel() == 0)
    size = board.size
    return [Position(int(i) // size, int(i) % size) for i in flat]


def game_status(board: Board) -> GameStatus:
    if board._status is None:
        board._status = _compute_status(board)
    return board._status


def _compute_status(board: Board) -> GameStatus:
    winner, r, c, dr, dc, length = win_scan(board.cells)
    if winner != 0:
        line = tuple(Position(r + i * dr, c + i * dc) for i in range(length))
        return GameStatus(WON, winner, line)
    if not (board.cells == 0).any():
        return GameStatus(DRAW)
    return GameStatus(IN_PROGRESS)


def win_scan(cells: np.ndarray) -> tuple[int, int, int, int, int, int]:
    """Locate the first maximal run of >= 5 like stones (see _kernels)."""
    return _kernels.win_scan(cells)


def serialize_row_major(board: Board) -> list[int]:
    """Flatten cells left-to-right, top row first; values in {-1, 0, +1}."""
    return [int(v) for v in board.cells.ravel()]


def deserialize_row_major(values, size: int | None = None) -> Board:
    """Rebuild a board grid from `serialize_row_major` output.

    The move history is not recoverable from cells alone, so the result
    has an empty history; cell contents round-trip exactly.
    """
    arr = np.asarray(list(values), dtype=np.int8)
    if size is None:
        size = int(round(len(arr) ** 0.5))
    if size * size != len(arr):
        raise InvalidSizeError(f"{len(arr)} cells is not a square board")
    if not MIN_SIZE <= size <= MAX_SIZE:
        raise InvalidSizeError(f"size {size} out of [{MIN_SIZE}, {MAX_SIZE}]")
    if not np.isin(arr, (-1, 0, 1)).all():
        raise InvalidSizeError("cell values must be -1, 0 or +1")
    return Board(size, arr.reshape(size, size), ())


def replay_moves(size: int, moves) -> Board:
    """Apply a (pos, player) sequence from an empty board, validating each."""
    board = new_board(size)
    for pos, player in moves:
        board = apply_move(board, Position(*pos), player)
    return board


def iter_line(start: Position, dr: int, dc: int, length: int) -> Iterator[Position]:
    for i in range(length):
        yield Position(start.row + i * dr, start.col + i * dc)
