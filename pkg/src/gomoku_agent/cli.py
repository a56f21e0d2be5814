"""Command-line entry point: self-play training, evaluation, serving,
replay export, and offline retraining from the store.

Exit codes: 0 success, 1 usage error, 2 runtime error. An optional
``key = value`` config file supplies defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .catalog import default_catalog, load_catalog_file
from .engine import new_board, apply_move
from .evaluation import HeuristicBackend, LlmConfig, make_backend
from .move_select import default_workers
from .persistence import load_checkpoint, load_transitions, save_checkpoint, Checkpoint
from .qlearn import QNetwork, ReplayBuffer, TrainConfig, sync_target, train_step
from .replay import load_game_replay
from .selfplay import evaluate_survival, run_selfplay
from .service import ServiceConfig, serve


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting(2)."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _sub(sub, name, description):
    return sub.add_parser(
        name, help=description, description=description,
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )


def _common_flags(p, *, store_default="selfplay.log"):
    p.add_argument("--store", default=store_default, help="transition log path")
    p.add_argument("--catalog", default="", help="catalog file ('' = bundled default)")
    p.add_argument("--config", default="", help="key = value config file")


def _llm_flags(p):
    p.add_argument("--llm-endpoint", default="", help="chat-completion URL")
    p.add_argument("--llm-model", default="", help="model name for the LLM backend")
    p.add_argument("--token-env", default="GOMOKU_LLM_TOKEN",
                   help="env var holding the LLM auth token")


def _build_parser() -> _Parser:
    parser = _Parser(prog="gomoku-agent", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = _sub(sub, "selfplay", "run resumable self-play training games")
    p.add_argument("--games", type=int, default=1, help="total games to reach")
    p.add_argument("--checkpoint", default="checkpoint.bin", help="checkpoint path")
    p.add_argument("--backend", choices=["heuristic", "llm"], default="heuristic",
                   help="move/score evaluator")
    p.add_argument("--workers", type=int, default=0, help="scoring threads (0 = cpu count)")
    p.add_argument("--seed", type=int, default=0, help="master random seed")
    p.add_argument("--size", type=int, default=15, help="board size")
    _common_flags(p)
    _llm_flags(p)

    p = _sub(sub, "eval", "measure survival steps against an opponent")
    p.add_argument("--games", type=int, default=8, help="evaluation games to play")
    p.add_argument("--checkpoint", default="", help="policy checkpoint ('' = untrained)")
    p.add_argument("--opponent", choices=["heuristic"], default="heuristic",
                   help="opponent backend")
    p.add_argument("--seed", type=int, default=0, help="evaluation seed")
    p.add_argument("--size", type=int, default=15, help="board size")
    p.add_argument("--workers", type=int, default=0, help="scoring threads (0 = cpu count)")
    p.add_argument("--catalog", default="", help="catalog file ('' = bundled default)")
    p.add_argument("--config", default="", help="key = value config file")

    p = _sub(sub, "serve", "run the arena HTTP service")
    p.add_argument("--port", type=int, default=8000, help="listen port")
    p.add_argument("--host", default="127.0.0.1", help="listen address")
    p.add_argument("--checkpoint", default="", help="policy checkpoint for the AI")
    p.add_argument("--backend", choices=["heuristic", "llm"], default="heuristic",
                   help="AI evaluator")
    p.add_argument("--workers", type=int, default=0, help="scoring threads (0 = cpu count)")
    p.add_argument("--ui-dir", default="", help="static web UI directory")
    _common_flags(p, store_default="")
    _llm_flags(p)

    p = _sub(sub, "replay", "print a stored game as text-board frames")
    p.add_argument("--game", type=int, default=None, help="game id (required)")
    _common_flags(p)

    p = _sub(sub, "train", "offline retraining from the stored transitions")
    p.add_argument("--checkpoint", default="checkpoint.bin", help="checkpoint path")
    p.add_argument("--steps", type=int, default=1000, help="gradient steps to run")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    _common_flags(p)
    return parser


def _apply_config_file(args: argparse.Namespace, parser: _Parser, argv: list[str]) -> None:
    """Fill unset flags from the config document; explicit flags win."""
    path = getattr(args, "config", "")
    if not path:
        return
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}")
    explicit = {tok.split("=")[0].lstrip("-").replace("-", "_")
                for tok in argv if tok.startswith("--")}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if not hasattr(args, key):
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        if key in explicit:
            continue
        current = getattr(args, key)
        if isinstance(current, bool):
            setattr(args, key, value.lower() in ("1", "true", "yes", "on"))
        elif isinstance(current, int):
            setattr(args, key, int(value))
        else:
            setattr(args, key, value)


def _make_backend(args) -> object:
    if args.backend == "llm":
        if not args.llm_endpoint:
            raise UsageError("--backend llm requires --llm-endpoint")
        return make_backend("llm", LlmConfig(
            endpoint=args.llm_endpoint,
            model=args.llm_model or "default",
            token_env=args.token_env,
        ))
    return HeuristicBackend()


def _catalog(args):
    return load_catalog_file(args.catalog) if args.catalog else default_catalog()


def _cmd_selfplay(args) -> int:
    if args.games < 0:
        raise UsageError("--games must be >= 0")
    cfg = TrainConfig(seed=args.seed)
    summary = run_selfplay(
        args.games,
        cfg,
        args.store,
        args.checkpoint,
        backend=_make_backend(args),
        catalog=_catalog(args),
        board_size=args.size,
        workers=args.workers if args.workers > 0 else default_workers(),
    )
    for line in summary.report_lines():
        print(line)
    return 0


def _cmd_eval(args) -> int:
    if args.games < 1:
        raise UsageError("--games must be >= 1")
    catalog = _catalog(args)
    if args.checkpoint:
        net = load_checkpoint(args.checkpoint).net
    else:
        cfg = TrainConfig(seed=args.seed)
        net = QNetwork(args.size * args.size, cfg.h1, cfg.h2,
                       catalog.action_space_size, seed=args.seed)
    mean, per_game = evaluate_survival(
        net,
        HeuristicBackend(),
        args.games,
        args.seed,
        catalog=catalog,
        board_size=args.size,
        workers=args.workers if args.workers > 0 else default_workers(),
    )
    print(f"games {args.games}")
    print(f"survival_steps {' '.join(str(v) for v in per_game)}")
    print(f"mean_survival_steps {mean:.3f}")
    return 0


def _cmd_serve(args) -> int:
    config = ServiceConfig(
        store_path=args.store or None,
        checkpoint_path=args.checkpoint or None,
        catalog_path=args.catalog or None,
        backend_tag=args.backend,
        workers=args.workers,
        llm_endpoint=args.llm_endpoint,
        llm_model=args.llm_model,
        token_env=args.token_env,
        ui_dir=args.ui_dir or None,
    )
    serve(config, host=args.host, port=args.port)
    return 0


def _cmd_replay(args) -> int:
    if args.game is None:
        raise UsageError("--game is required")
    game = load_game_replay(args.store, args.game, _catalog(args))
    board = new_board(game.board_size)
    print(f"game {game.game_id}: {len(game.turns)} moves, "
          f"outcome {game.outcome}" + (f" (winner {game.winner})" if game.winner else ""))
    print(board.render())
    for t in game.turns:
        board = apply_move(board, t.position, t.player)
        color = "black" if t.player == 1 else "white"
        label = f" [{t.strategy} / {t.logic}]" if t.strategy else ""
        print(f"\nmove {t.turn}: {color} -> ({t.position.row},{t.position.col})"
              f" reward {t.reward:+.3f}{label}")
        print(board.render())
    return 0


def _cmd_train(args) -> int:
    if args.steps < 0:
        raise UsageError("--steps must be >= 0")
    records, _ = load_transitions(args.store)
    if not records:
        raise RuntimeError(f"store {args.store} holds no transitions")
    catalog = _catalog(args)
    state_dim = len(records[0].state)
    cfg = TrainConfig(seed=args.seed)
    if Path(args.checkpoint).exists():
        cp = load_checkpoint(args.checkpoint)
        net, target = cp.net, cp.target
        steps_done, selections = cp.train_steps, cp.selections
        last_game = cp.last_game_id
    else:
        net = QNetwork(state_dim, cfg.h1, cfg.h2, catalog.action_space_size, seed=args.seed)
        target = net.copy()
        steps_done = selections = last_game = 0
    buffer = ReplayBuffer(cfg.replay_capacity)
    for t in records:
        buffer.push(t)
    if len(buffer) < cfg.batch_size:
        raise RuntimeError(
            f"store has {len(buffer)} transitions; need >= {cfg.batch_size} to train"
        )
    rng = np.random.default_rng(args.seed)
    last_loss = float("nan")
    for _ in range(args.steps):
        batch = buffer.sample(cfg.batch_size, rng)
        last_loss = train_step(net, target, batch, cfg)
        steps_done += 1
        if steps_done % cfg.target_sync_interval == 0:
            sync_target(net, target)
    save_checkpoint(
        Checkpoint(net=net, target=target, train_steps=steps_done,
                   selections=selections, last_game_id=last_game,
                   rng_state=rng.bit_generator.state),
        args.checkpoint,
    )
    print(f"trained_steps {args.steps}")
    print(f"total_steps {steps_done}")
    print(f"final_loss {last_loss:.6f}")
    return 0


_COMMANDS = {
    "selfplay": _cmd_selfplay,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
    "replay": _cmd_replay,
    "train": _cmd_train,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        _apply_config_file(args, parser, argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
