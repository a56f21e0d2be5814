"""Gomoku engine and self-training agent.

A strategy-selection DQN picks a (strategy, logic) pair, an evaluator
backend proposes a move, and local position evaluation turns it into a
guaranteed-legal play. Self-play training is resumable from a durable
transition log; an HTTP arena serves human-vs-AI games and replays.
"""

from .engine import (
    BLACK,
    WHITE,
    Board,
    GameStatus,
    Position,
    apply_move,
    game_status,
    legal_positions,
    new_board,
    serialize_row_major,
)
from .catalog import Catalog, decode_action, default_catalog, encode_action, load_catalog
from .evaluation import HeuristicBackend, LlmBackend, LlmConfig, WinRates
from .move_select import choose_move, legal_region, score_parallel
from .qlearn import QNetwork, ReplayBuffer, TrainConfig, Transition, encode_state
from .selfplay import evaluate_survival, play_game, run_selfplay

__all__ = [
    "BLACK",
    "WHITE",
    "Board",
    "Catalog",
    "GameStatus",
    "HeuristicBackend",
    "LlmBackend",
    "LlmConfig",
    "Position",
    "QNetwork",
    "ReplayBuffer",
    "TrainConfig",
    "Transition",
    "WinRates",
    "apply_move",
    "choose_move",
    "decode_action",
    "default_catalog",
    "encode_action",
    "encode_state",
    "evaluate_survival",
    "game_status",
    "legal_positions",
    "legal_region",
    "load_catalog",
    "new_board",
    "play_game",
    "run_selfplay",
    "score_parallel",
    "serialize_row_major",
]

__version__ = "0.1.0"
