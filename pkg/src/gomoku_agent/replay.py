"""Rebuild playable game replays from the transition log.

The log never stores move coordinates directly; it stores mover-view
board vectors. Consecutive states differ by exactly the stones played in
between, so the move list falls out of state diffs: turn k's move is the
cell that appears between the board before turn k and the board before
turn k+1 (the final record's next_state closes the game).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import Catalog, decode_action
from .engine import BLACK, WHITE, Position, replay_moves
from .persistence import load_transitions
from .qlearn import Transition


class ReplayError(Exception):
    code = "replay_error"


class UnknownGameError(ReplayError):
    code = "unknown_game"


@dataclass
class ReplayTurn:
    turn: int
    player: int
    position: Position
    action: int
    strategy: str
    logic: str
    reward: float
    done: bool


@dataclass
class GameReplay:
    game_id: int
    board_size: int
    turns: list[ReplayTurn]
    outcome: str  # "won" | "draw" | "incomplete"
    winner: int | None

    @property
    def moves(self) -> list[tuple[Position, int]]:
        return [(t.position, t.player) for t in self.turns]


def _mover(turn: int) -> int:
    return BLACK if turn % 2 == 0 else WHITE


def _new_stones(before: np.ndarray, after: np.ndarray, size: int):
    """Cells that changed from empty, as (Position, color), row-major."""
    diff = np.flatnonzero(after != before)
    return [
        (Position(int(i) // size, int(i) % size), int(after[int(i)]))
        for i in diff
    ]


def _game_outcome(records: list[Transition]) -> tuple[str, int | None]:
    done = [r for r in records if r.done]
    if not done:
        return "incomplete", None
    for r in done:
        if r.reward > 0:
            return "won", _mover(r.turn)
    return "draw", None


def reconstruct_game(records: list[Transition], catalog: Catalog | None = None) -> GameReplay:
    if not records:
        raise UnknownGameError("no records for game")
    records = sorted(records, key=lambda r: r.turn)
    size = int(round(len(records[0].state) ** 0.5))
    game_id = records[0].game_id

    turns: list[ReplayTurn] = []
    for k, rec in enumerate(records):
        mover = _mover(rec.turn)
        before = rec.state * mover  # back to absolute colors
        if k + 1 < len(records):
            nxt = records[k + 1]
            after = nxt.state * _mover(nxt.turn)
        else:
            after = rec.next_state * mover
        stones = _new_stones(before, after, size)
        own = [s for s in stones if s[1] == mover]
        if len(own) != 1:
            raise ReplayError(
                f"game {game_id} turn {rec.turn}: cannot derive a unique move"
            )
        turns.append(_turn_record(rec, mover, own[0][0], catalog))
        if k + 1 == len(records):
            # An unfinished game's last next_state may already contain the
            # opponent's (never-recorded) reply; surface it for the viewer.
            for pos, color in stones:
                if color == -mover:
                    extra = Transition(game_id, rec.turn + 1, rec.state, 0, 0.0,
                                       rec.next_state, False)
                    turns.append(_turn_record(extra, -mover, pos, catalog, synthetic=True))

    outcome, winner = _game_outcome(records)
    return GameReplay(game_id, size, turns, outcome, winner)


def _turn_record(rec: Transition, mover: int, pos: Position,
                 catalog: Catalog | None, synthetic: bool = False) -> ReplayTurn:
    if synthetic or catalog is None or rec.action >= (catalog.action_space_size if catalog else 0):
        strategy_name = logic_name = ""
    else:
        strategy, logic = decode_action(rec.action, catalog)
        strategy_name, logic_name = strategy.name, logic.name
    return ReplayTurn(
        turn=rec.turn,
        player=mover,
        position=pos,
        action=0 if synthetic else rec.action,
        strategy=strategy_name,
        logic=logic_name,
        reward=0.0 if synthetic else rec.reward,
        done=False if synthetic else rec.done,
    )


def list_games(store_path: str | Path) -> list[dict]:
    """Summaries of every game in the store, in id order."""
    records, _ = load_transitions(store_path)
    by_game: dict[int, list[Transition]] = {}
    for r in records:
        by_game.setdefault(r.game_id, []).append(r)
    out = []
    for game_id in sorted(by_game):
        outcome, winner = _game_outcome(by_game[game_id])
        out.append(
            {
                "game_id": game_id,
                "moves": len(by_game[game_id]),
                "outcome": outcome,
                "winner": winner,
            }
        )
    return out


def load_game_replay(store_path: str | Path, game_id: int,
                     catalog: Catalog | None = None) -> GameReplay:
    records, _ = load_transitions(store_path)
    mine = [r for r in records if r.game_id == game_id]
    if not mine:
        raise UnknownGameError(f"game {game_id} not in store")
    return reconstruct_game(mine, catalog)


def verify_replay(replay: GameReplay) -> None:
    """Re-apply the reconstructed moves through the engine; raises on
    any illegal move, proving the reconstruction is a real game."""
    replay_moves(replay.board_size, [(t.position, t.player) for t in replay.turns])
