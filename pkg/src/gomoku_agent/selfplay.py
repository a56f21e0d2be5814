"""Self-play training loop, reward assignment, and survival evaluation.

Two agents share one strategy-selection network and alternate from a
fresh board until the game ends. Each move yields a transition whose
next_state is the board at the same player's *next* turn, so a mover's
transition is completed (and persisted) right after the opponent replies,
and the last two transitions are finalized with the terminal rewards:
+10 winner, -10 loser, 0 for both on a draw. Nonterminal rewards are the
centered post-move win rate 2*p - 1 in [-1, 1].

Training happens between games: every completed game's transitions enter
the replay buffer, then one SGD step runs per new transition (once the
buffer can fill a batch), the target network syncing on its step cadence.
A checkpoint is written after every game, which together with the
per-record durable log makes any interrupted run resumable with
byte-identical continuation.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .catalog import Catalog, decode_action, default_catalog
from .engine import (
    BLACK,
    WHITE,
    WON,
    DRAW,
    Position,
    apply_move,
    game_status,
    new_board,
)
from .evaluation import EvaluatorBackend, HeuristicBackend, estimate_win_rates
from .move_select import choose_move
from .persistence import (
    Checkpoint,
    TransitionLog,
    load_checkpoint,
    load_transitions,
    save_checkpoint,
    trim_incomplete_game,
)
from .qlearn import (
    QNetwork,
    ReplayBuffer,
    TrainConfig,
    Transition,
    encode_state,
    select_action,
    sync_target,
    train_step,
)

WIN_REWARD = 10.0
LOSS_REWARD = -10.0
DRAW_REWARD = 0.0

OUTCOME_WON = "won"
OUTCOME_DRAW = "draw"
OUTCOME_TRUNCATED = "truncated"


class SelfPlayError(Exception):
    code = "selfplay_error"


class BackendAbortError(SelfPlayError):
    """A backend kept failing mid-game; the partial game must be replayed."""

    code = "backend_abort"


@dataclass
class AgentSpec:
    player: int
    backend: EvaluatorBackend


@dataclass
class TurnRecord:
    turn: int
    player: int
    position: Position
    action: int
    reward: float
    done: bool
    seconds: float


@dataclass
class GameRecord:
    game_id: int
    outcome: str
    winner: int | None
    moves: list[tuple[Position, int]]
    turns: list[TurnRecord]
    transitions: list[Transition]
    aborted: bool = False  # backend gave up mid-game; log holds a partial game
    abort_reason: str = ""

    @property
    def move_count(self) -> int:
        return len(self.moves)


@dataclass
class Counters:
    selections: int = 0
    train_steps: int = 0


@dataclass
class _Pending:
    player: int
    turn: int
    state: np.ndarray
    action: int
    reward: float


def play_game(
    game_id: int,
    agents: dict[int, AgentSpec],
    net: QNetwork,
    cfg: TrainConfig,
    store: TransitionLog | None,
    rng: np.random.Generator,
    catalog: Catalog,
    counters: Counters | None = None,
    board_size: int = 15,
    workers: int = 1,
) -> GameRecord:
    """Play one full game, persisting each transition as it completes."""
    counters = counters if counters is not None else Counters()
    board = new_board(board_size)
    move_cap = board_size * board_size
    pending: _Pending | None = None
    moves: list[tuple[Position, int]] = []
    turns: list[TurnRecord] = []
    transitions: list[Transition] = []
    turn = 0

    def emit(t: Transition):
        if store is not None:
            store.append(t)
        transitions.append(t)

    while True:
        mover = board.side_to_move
        agent = agents[mover]
        state = encode_state(board, mover)
        epsilon = cfg.epsilon_at(counters.selections)
        action = select_action(net, state, epsilon, rng)
        counters.selections += 1
        strategy, logic = decode_action(action, catalog)

        started = time.perf_counter()
        try:
            candidate = agent.backend.propose_move(board, mover, strategy, logic)
            move, _ = choose_move(board, candidate, agent.backend, mover, workers)
        except Exception as exc:
            return GameRecord(
                game_id, OUTCOME_TRUNCATED, None, moves, turns, transitions,
                aborted=True, abort_reason=f"turn {turn}: {exc}",
            )
        next_board = apply_move(board, move, mover)
        status = game_status(next_board)
        over = status.over
        truncated = not over and turn + 1 >= move_cap  # defensive; engine draws first

        if over or truncated:
            reward = 0.0
        else:
            try:
                rates = estimate_win_rates(agent.backend, next_board, mover)
            except Exception as exc:
                return GameRecord(
                    game_id, OUTCOME_TRUNCATED, None, moves, turns, transitions,
                    aborted=True, abort_reason=f"turn {turn}: win-rate estimate: {exc}",
                )
            reward = 2.0 * rates.p_mover - 1.0
        elapsed = time.perf_counter() - started

        if pending is not None:
            # The previous mover's transition completes now that we know
            # the board they will face next (or the terminal board).
            if over:
                prev_reward = _terminal_reward(status, pending.player)
                prev_done = True
            elif truncated:
                prev_reward, prev_done = 0.0, False
            else:
                prev_reward, prev_done = pending.reward, False
            emit(
                Transition(
                    game_id, pending.turn, pending.state, pending.action,
                    prev_reward, encode_state(next_board, pending.player), prev_done,
                )
            )

        moves.append((move, mover))
        if over:
            final_reward = _terminal_reward(status, mover)
            emit(
                Transition(
                    game_id, turn, state, action, final_reward,
                    encode_state(next_board, mover), True,
                )
            )
            turns.append(TurnRecord(turn, mover, move, action, final_reward, True, elapsed))
            outcome = OUTCOME_WON if status.state == WON else OUTCOME_DRAW
            return GameRecord(game_id, outcome, status.winner, moves, turns, transitions)
        if truncated:
            emit(
                Transition(
                    game_id, turn, state, action, 0.0,
                    encode_state(next_board, mover), False,
                )
            )
            turns.append(TurnRecord(turn, mover, move, action, 0.0, False, elapsed))
            return GameRecord(game_id, OUTCOME_TRUNCATED, None, moves, turns, transitions)

        turns.append(TurnRecord(turn, mover, move, action, reward, False, elapsed))
        pending = _Pending(mover, turn, state, action, reward)
        board = next_board
        turn += 1


def _terminal_reward(status, player: int) -> float:
    if status.state == DRAW:
        return DRAW_REWARD
    return WIN_REWARD if status.winner == player else LOSS_REWARD


@dataclass
class SelfPlaySummary:
    games: int = 0
    wins_black: int = 0
    wins_white: int = 0
    draws: int = 0
    truncated: int = 0
    total_moves: int = 0
    total_seconds: float = 0.0
    train_steps: int = 0
    transitions: int = 0
    losses: list[float] = field(default_factory=list)  # per-game mean loss

    @property
    def mean_moves(self) -> float:
        return self.total_moves / self.games if self.games else 0.0

    @property
    def mean_seconds_per_move(self) -> float:
        return self.total_seconds / self.total_moves if self.total_moves else 0.0

    def report_lines(self) -> list[str]:
        lines = [
            f"games {self.games}",
            f"wins_black {self.wins_black}",
            f"wins_white {self.wins_white}",
            f"draws {self.draws}",
            f"truncated {self.truncated}",
            f"mean_moves {self.mean_moves:.2f}",
            f"mean_seconds_per_move {self.mean_seconds_per_move:.4f}",
            f"train_steps {self.train_steps}",
            f"transitions {self.transitions}",
        ]
        lines.extend(f"loss_sample {i} {v:.6f}" for i, v in enumerate(self.losses))
        return lines


def run_selfplay(
    n_games: int,
    cfg: TrainConfig,
    store_path: str | Path,
    checkpoint_path: str | Path,
    *,
    backend: EvaluatorBackend | None = None,
    catalog: Catalog | None = None,
    board_size: int = 15,
    workers: int = 1,
    progress=None,
) -> SelfPlaySummary:
    """Play and train for `n_games`, resuming from checkpoint + store.

    Completed games are skipped on resume; a trailing incomplete game (or
    any game newer than the checkpoint) is trimmed from the log and
    replayed, so a resumed run reproduces the uninterrupted one exactly.
    """
    if n_games < 0:
        raise ValueError("n_games must be >= 0")
    backend = backend or HeuristicBackend()
    catalog = catalog or default_catalog()
    store_path = Path(store_path)
    checkpoint_path = Path(checkpoint_path)
    state_dim = board_size * board_size
    n_actions = catalog.action_space_size

    counters = Counters()
    rng = np.random.default_rng(cfg.seed)
    last_done_game = 0
    if checkpoint_path.exists():
        cp = load_checkpoint(checkpoint_path)
        net, target = cp.net, cp.target
        if net.dims != (state_dim, cfg.h1, cfg.h2, n_actions):
            raise SelfPlayError(
                f"checkpoint dims {net.dims} do not match configuration "
                f"{(state_dim, cfg.h1, cfg.h2, n_actions)}"
            )
        counters = Counters(cp.selections, cp.train_steps)
        rng.bit_generator.state = cp.rng_state
        last_done_game = cp.last_game_id
    else:
        net = QNetwork(state_dim, cfg.h1, cfg.h2, n_actions, seed=cfg.seed)
        target = net.copy()

    if store_path.exists():
        trim_incomplete_game(store_path)
        _trim_games_after(store_path, last_done_game)

    buffer = ReplayBuffer(cfg.replay_capacity)
    stored, _ = load_transitions(store_path) if store_path.exists() else ([], 0)
    for t in stored:
        buffer.push(t)

    summary = SelfPlaySummary(train_steps=counters.train_steps, transitions=len(stored))
    agents = {BLACK: AgentSpec(BLACK, backend), WHITE: AgentSpec(WHITE, backend)}

    with TransitionLog(store_path, timestamp_mode="logical") as store:
        for game_id in range(last_done_game + 1, n_games + 1):
            record = play_game(
                game_id, agents, net, cfg, store, rng, catalog,
                counters=counters, board_size=board_size, workers=workers,
            )
            if record.aborted:
                # Leave the partial game's records in the log and the
                # checkpoint at the previous game; rerunning resumes here.
                raise BackendAbortError(
                    f"game {game_id} aborted ({record.abort_reason}); rerun to resume"
                )
            summary.games += 1
            summary.total_moves += record.move_count
            summary.total_seconds += sum(t.seconds for t in record.turns)
            summary.transitions += len(record.turns)
            if record.outcome == OUTCOME_WON:
                if record.winner == BLACK:
                    summary.wins_black += 1
                else:
                    summary.wins_white += 1
            elif record.outcome == OUTCOME_DRAW:
                summary.draws += 1
            else:
                summary.truncated += 1

            for t in record.transitions:
                buffer.push(t)

            game_losses = []
            for _ in range(len(record.transitions)):
                if len(buffer) < cfg.batch_size:
                    break
                batch = buffer.sample(cfg.batch_size, rng)
                game_losses.append(train_step(net, target, batch, cfg))
                counters.train_steps += 1
                if counters.train_steps % cfg.target_sync_interval == 0:
                    sync_target(net, target)
            if game_losses:
                summary.losses.append(float(np.mean(game_losses)))
            summary.train_steps = counters.train_steps

            save_checkpoint(
                Checkpoint(
                    net=net,
                    target=target,
                    train_steps=counters.train_steps,
                    selections=counters.selections,
                    last_game_id=game_id,
                    rng_state=rng.bit_generator.state,
                ),
                checkpoint_path,
            )
            _write_stats_sidecar(checkpoint_path, summary, counters, cfg)
            if progress is not None:
                progress(game_id, record, summary)
    return summary


def _trim_games_after(path: Path, last_game_id: int) -> None:
    """Drop trailing records of games newer than the checkpoint knows.

    Covers a crash between a game's final append and its checkpoint save:
    those games are replayed rather than half-trusted.
    """
    records, _ = load_transitions(path)
    keep = len(records)
    while keep > 0 and records[keep - 1].game_id > last_game_id:
        keep -= 1
    if keep != len(records):
        from .persistence import _rewrite_prefix

        _rewrite_prefix(path, keep)


def _write_stats_sidecar(checkpoint_path: Path, summary: SelfPlaySummary,
                         counters: Counters, cfg: TrainConfig) -> None:
    stats = {
        "games": summary.games,
        "transitions": summary.transitions,
        "train_steps": counters.train_steps,
        "selections": counters.selections,
        "epsilon": cfg.epsilon_at(counters.selections),
        "loss_samples": summary.losses[-100:],
    }
    path = checkpoint_path.with_name(checkpoint_path.name + ".stats.json")
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(stats), encoding="utf-8")
    os.replace(tmp, path)


def evaluate_survival(
    net: QNetwork,
    opponent: EvaluatorBackend,
    n_games: int,
    seed: int,
    *,
    policy_backend: EvaluatorBackend | None = None,
    catalog: Catalog | None = None,
    board_size: int = 15,
    workers: int = 1,
) -> tuple[float, list[int]]:
    """Average survival steps of the greedy policy (black) vs `opponent`.

    The opponent's proposals are applied directly; the policy runs the
    full pipeline (action selection at epsilon 0, candidate proposal,
    legal-region argmax). Survival steps for one game = moves the policy
    side made before the game ended.
    """
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    policy_backend = policy_backend or HeuristicBackend()
    catalog = catalog or default_catalog()
    results = []
    for g in range(n_games):
        rng = np.random.default_rng([seed, g])
        board = new_board(board_size)
        own_moves = 0
        while True:
            mover = board.side_to_move
            if mover == BLACK:
                state = encode_state(board, BLACK)
                action = select_action(net, state, 0.0, rng)
                strategy, logic = decode_action(action, catalog)
                candidate = policy_backend.propose_move(board, BLACK, strategy, logic)
                move, _ = choose_move(board, candidate, policy_backend, BLACK, workers)
                own_moves += 1
            else:
                move = opponent.propose_move(board, WHITE)
            board = apply_move(board, move, mover)
            if game_status(board).over:
                break
        results.append(own_moves)
    return float(np.mean(results)), results
