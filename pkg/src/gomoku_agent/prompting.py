"""Prompt rendering and reply parsing for the language-model backend.

Rendering is pure string substitution over a validated template; parsing
is last-match extraction, since model replies tend to deliberate first
and conclude at the end. Coordinates are 0-based (row, col) everywhere.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .catalog import Logic, Strategy
from .engine import Board, Position, legal_positions, serialize_row_major

MOVE_PLACEHOLDERS = (
    "{rule}",
    "{board_size}",
    "{player_id}",
    "{think}",
    "{relationship}",
    "{zero_position}",
    "{board_array}",
)

_PAIR_RE = re.compile(r"(?<![\d.-])(\d+)\s*,\s*(\d+)")
_NUMBER_RE = re.compile(r"(?<![\d.-])(\d+(?:\.\d+)?)")
_PERCENT_RE = re.compile(r"(?<![\d.-])(\d+(?:\.\d+)?)\s*%")


class PromptError(Exception):
    code = "prompt_error"


class UnresolvedPlaceholderError(PromptError):
    code = "unresolved_placeholder"


class NoPositionFoundError(PromptError):
    code = "no_position_found"


class PositionOutOfBoundsError(PromptError):
    code = "position_out_of_bounds"


class NoScoreFoundError(PromptError):
    code = "no_score_found"


class ScoreOutOfRangeError(PromptError):
    code = "score_out_of_range"


class NoWinRateFoundError(PromptError):
    code = "no_win_rate_found"


@dataclass(frozen=True)
class PromptTemplate:
    body: str

    def validate(self) -> "PromptTemplate":
        for ph in MOVE_PLACEHOLDERS:
            n = self.body.count(ph)
            if n != 1:
                raise UnresolvedPlaceholderError(
                    f"template must contain {ph} exactly once, found {n}"
                )
        leftovers = set(re.findall(r"\{[^{}]*\}", self.body)) - set(MOVE_PLACEHOLDERS)
        if leftovers:
            raise UnresolvedPlaceholderError(f"unknown placeholders: {sorted(leftovers)}")
        return self


@dataclass(frozen=True)
class MoveProposal:
    position: Position
    raw: str


def default_template() -> PromptTemplate:
    text = resources.files("gomoku_agent").joinpath("data/move_prompt.txt").read_text("utf-8")
    return PromptTemplate(text).validate()


def default_rules_text() -> str:
    return resources.files("gomoku_agent").joinpath("data/rules.txt").read_text("utf-8").strip()


def load_template(path: str | Path) -> PromptTemplate:
    return PromptTemplate(Path(path).read_text(encoding="utf-8")).validate()


def render_move_prompt(
    template: PromptTemplate,
    rules_text: str,
    board: Board,
    player: int,
    strategy: Strategy,
    logic: Logic,
) -> str:
    """Substitute all placeholders; the result never contains braces."""
    template.validate()
    zeros = ", ".join(f"({p.row},{p.col})" for p in legal_positions(board))
    cells = "[" + ", ".join(str(v) for v in serialize_row_major(board)) + "]"
    text = template.body
    # {board_size} renders as "N*N" so the dimensions read naturally while
    # the placeholder still appears only once in the template.
    text = text.replace("{rule}", rules_text)
    text = text.replace("{board_size}", f"{board.size}*{board.size}")
    text = text.replace("{player_id}", str(player))
    text = text.replace("{think}", f"{strategy.name}: {strategy.description}")
    text = text.replace("{relationship}", f"{logic.name} ({logic.description})")
    text = text.replace("{zero_position}", zeros)
    text = text.replace("{board_array}", cells)
    if "{" in text or "}" in text:
        raise UnresolvedPlaceholderError("rendered prompt still contains braces")
    return text


def render_score_prompt(board: Board, pos: Position, player: int) -> str:
    cells = "[" + ", ".join(str(v) for v in serialize_row_major(board)) + "]"
    return (
        f"On a {board.size}*{board.size} Gomoku board given as a flat row-major array "
        f"(my stones are {player}, opponent {-player}, empty 0): {cells}\n"
        f"How good is it for me to place my next stone at (row, col) = ({pos.row}, {pos.col})?\n"
        "Consider the threats it creates, the threats it stops, and its placement.\n"
        "Reply with a single integer score between 0 (useless) and 100 (wins the game)."
    )


def render_win_rate_prompt(board: Board, mover: int) -> str:
    cells = "[" + ", ".join(str(v) for v in serialize_row_major(board)) + "]"
    return (
        f"Here is a {board.size}*{board.size} Gomoku position as a flat row-major array "
        f"(side {mover} stones are {mover}, the opponent {-mover}, empty 0): {cells}\n"
        f"Estimate each side's chance of winning from here.\n"
        f"Answer with two percentages, the win rate of side {mover} first, "
        "for example: 55% 45%."
    )


def parse_position(reply: str, size: int) -> Position:
    """Take the last `(r, c)` or `r,c` integer pair in the reply."""
    matches = _PAIR_RE.findall(reply)
    if not matches:
        raise NoPositionFoundError(f"no coordinate pair in reply: {reply[:80]!r}")
    row, col = (int(x) for x in matches[-1])
    if not (0 <= row < size and 0 <= col < size):
        raise PositionOutOfBoundsError(f"({row}, {col}) outside size-{size} board")
    return Position(row, col)


def parse_score(reply: str) -> float:
    """Take the last number in the reply; it must lie in [0, 100]."""
    matches = _NUMBER_RE.findall(reply)
    if not matches:
        raise NoScoreFoundError(f"no number in reply: {reply[:80]!r}")
    value = float(matches[-1])
    if not 0.0 <= value <= 100.0:
        raise ScoreOutOfRangeError(f"score {value} outside [0, 100]")
    return value


def parse_win_rates(reply: str) -> tuple[float, float]:
    """Take the last two percentages, normalized to sum to 1."""
    matches = _PERCENT_RE.findall(reply)
    if len(matches) < 2:
        raise NoWinRateFoundError(f"need two percentages in reply: {reply[:80]!r}")
    first, second = float(matches[-2]), float(matches[-1])
    total = first + second
    if total <= 0:
        raise NoWinRateFoundError("percentages sum to zero")
    return first / total, second / total
