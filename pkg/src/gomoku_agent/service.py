"""HTTP arena: live human-vs-AI sessions, explanations, replays, stats.

Sessions live in memory (evicted after an idle hour) and are mutated
under a per-session lock; every mutation returns the full board snapshot
so clients never track rules locally. AI moves are pull-based: the
client posts /ai-move when it wants the machine to think. Replays and
stats come from the durable store, not from sessions.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import replay as replay_mod
from .catalog import Catalog, decode_action, default_catalog, load_catalog_file
from .engine import (
    BLACK,
    WHITE,
    Board,
    EngineError,
    GameOverError,
    InvalidSizeError,
    OccupiedError,
    OutOfBoundsError,
    Position,
    WrongTurnError,
    apply_move,
    game_status,
    new_board,
)
from .evaluation import EvaluatorBackend, LlmConfig, make_backend
from .move_select import choose_move, default_workers
from .persistence import load_checkpoint, load_transitions
from .qlearn import QNetwork, encode_state, select_action

SESSION_TTL_SECONDS = 3600.0


class ServiceError(Exception):
    def __init__(self, code: str, message: str, status: int):
        super().__init__(message)
        self.code = code
        self.status = status


def _err(code: str, message: str, status: int) -> ServiceError:
    return ServiceError(code, message, status)


@dataclass
class ServiceConfig:
    store_path: str | None = None
    checkpoint_path: str | None = None
    catalog_path: str | None = None
    backend_tag: str = "heuristic"
    workers: int = 0  # 0 = cpu count
    llm_endpoint: str = ""
    llm_model: str = ""
    token_env: str = "GOMOKU_LLM_TOKEN"
    ui_dir: str | None = None
    session_ttl: float = SESSION_TTL_SECONDS


@dataclass
class AiMoveExplanation:
    strategy: str
    logic: str
    candidates: list[tuple[Position, float]]
    chosen: Position
    elapsed_ms: float

    def to_json(self) -> dict:
        return {
            "strategy": self.strategy,
            "logic": self.logic,
            "candidates": [
                {"row": p.row, "col": p.col, "score": s} for p, s in self.candidates
            ],
            "chosen": {"row": self.chosen.row, "col": self.chosen.col},
            "elapsed_ms": self.elapsed_ms,
        }


@dataclass
class _Subscriber:
    loop: asyncio.AbstractEventLoop
    queue: asyncio.Queue


@dataclass
class Session:
    id: str
    board: Board
    human: int
    backend_tag: str
    backend: EvaluatorBackend
    net: QNetwork
    created_at: float
    last_access: float
    version: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list[_Subscriber] = field(default_factory=list)
    ai_cache: dict[int, dict] = field(default_factory=dict)


class CreateSessionRequest(BaseModel):
    size: int = 15
    human: str = "black"  # "black" | "white"
    backend: str | None = None
    checkpoint: str | None = None


class MoveRequest(BaseModel):
    row: int
    col: int


class Arena:
    """All mutable service state; the FastAPI app delegates here."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.catalog: Catalog = (
            load_catalog_file(config.catalog_path) if config.catalog_path else default_catalog()
        )
        self.workers = config.workers if config.workers > 0 else default_workers()
        self.sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()
        self._default_net: QNetwork | None = None

    # -- helpers ------------------------------------------------------

    def _llm_config(self) -> LlmConfig:
        if not self.config.llm_endpoint:
            raise _err("bad_request", "service has no LLM endpoint configured", 400)
        return LlmConfig(
            endpoint=self.config.llm_endpoint,
            model=self.config.llm_model or "default",
            token_env=self.config.token_env,
        )

    def _net_for(self, checkpoint: str | None, size: int) -> QNetwork:
        path = checkpoint or self.config.checkpoint_path
        if path and Path(path).exists():
            try:
                net = load_checkpoint(path).net
            except Exception as exc:
                raise _err("checkpoint_error", f"cannot load checkpoint: {exc}", 400)
            if net.dims[0] != size * size:
                raise _err(
                    "checkpoint_error",
                    f"checkpoint expects a {int(net.dims[0] ** 0.5)}-board, session is {size}",
                    400,
                )
            return net
        if checkpoint:  # explicitly requested but missing
            raise _err("checkpoint_error", f"checkpoint {checkpoint} not found", 400)
        if self._default_net is None or self._default_net.dims[0] != size * size:
            self._default_net = QNetwork(
                size * size, 64, 64, self.catalog.action_space_size, seed=0
            )
        return self._default_net

    def _evict_idle(self) -> None:
        now = time.monotonic()
        with self._sessions_lock:
            dead = [
                sid
                for sid, s in self.sessions.items()
                if now - s.last_access > self.config.session_ttl
            ]
            for sid in dead:
                del self.sessions[sid]

    def _get_session(self, sid: str) -> Session:
        self._evict_idle()
        with self._sessions_lock:
            session = self.sessions.get(sid)
        if session is None:
            raise _err("unknown_session", f"no session {sid}", 404)
        session.last_access = time.monotonic()
        return session

    def _emit(self, session: Session, event: str, data: dict) -> None:
        # Mutations run in worker threads; hand events to each subscriber's
        # event loop without blocking.
        for sub in list(session.subscribers):
            sub.loop.call_soon_threadsafe(sub.queue.put_nowait, (event, data))

    # -- operations ---------------------------------------------------

    def create_session(self, req: CreateSessionRequest) -> Session:
        if req.human not in ("black", "white"):
            raise _err("bad_request", "human color must be 'black' or 'white'", 400)
        backend_tag = req.backend or self.config.backend_tag
        try:
            board = new_board(req.size)
            backend = (
                make_backend("llm", self._llm_config())
                if backend_tag == "llm"
                else make_backend(backend_tag)
            )
        except InvalidSizeError as exc:
            raise _err("bad_request", str(exc), 400)
        except ValueError as exc:
            raise _err("bad_request", str(exc), 400)
        net = self._net_for(req.checkpoint, req.size)
        session = Session(
            id=uuid.uuid4().hex,
            board=board,
            human=BLACK if req.human == "black" else WHITE,
            backend_tag=backend_tag,
            backend=backend,
            net=net,
            created_at=time.time(),
            last_access=time.monotonic(),
        )
        with self._sessions_lock:
            self.sessions[session.id] = session
        return session

    def submit_human_move(self, sid: str, row: int, col: int) -> Session:
        session = self._get_session(sid)
        with session.lock:
            status = game_status(session.board)
            if status.over:
                raise _err("session_finished", "game already finished", 409)
            if session.board.side_to_move != session.human:
                raise _err("not_your_turn", "waiting for the AI move", 409)
            try:
                session.board = apply_move(
                    session.board, Position(row, col), session.human
                )
            except OccupiedError as exc:
                raise _err("occupied", str(exc), 409)
            except OutOfBoundsError as exc:
                raise _err("out_of_bounds", str(exc), 400)
            except (WrongTurnError, GameOverError) as exc:
                raise _err("not_your_turn", str(exc), 409)
            except EngineError as exc:
                raise _err(exc.code, str(exc), 400)
            session.version += 1
            self._emit(session, "move-applied", snapshot(session))
        return session

    def request_ai_move(self, sid: str) -> tuple[Session, dict]:
        session = self._get_session(sid)
        with session.lock:
            n = len(session.board.history)
            if n > 0 and (n - 1) in session.ai_cache:
                return session, session.ai_cache[n - 1]  # repeat of last turn
            status = game_status(session.board)
            if status.over:
                raise _err("session_finished", "game already finished", 409)
            ai_player = -session.human
            if session.board.side_to_move != ai_player:
                raise _err("not_your_turn", "it is the human's turn", 409)
            self._emit(session, "ai-thinking", {"id": session.id, "version": session.version})

            started = time.perf_counter()
            state = encode_state(session.board, ai_player)
            action = select_action(session.net, state, 0.0, np.random.default_rng(0))
            strategy, logic = decode_action(action, self.catalog)
            try:
                candidate = session.backend.propose_move(
                    session.board, ai_player, strategy, logic
                )
                move, scored = choose_move(
                    session.board, candidate, session.backend, ai_player, self.workers
                )
            except Exception as exc:
                raise _err("backend_error", f"AI backend failed: {exc}", 500)
            session.board = apply_move(session.board, move, ai_player)
            session.version += 1
            explanation = AiMoveExplanation(
                strategy=strategy.name,
                logic=logic.name,
                candidates=[(s.position, s.score) for s in scored],
                chosen=move,
                elapsed_ms=(time.perf_counter() - started) * 1000.0,
            )
            payload = {
                "position": {"row": move.row, "col": move.col},
                "explanation": explanation.to_json(),
                "session": snapshot(session),
            }
            session.ai_cache = {n: payload}  # only the latest turn is replayable
            self._emit(session, "ai-moved", payload)
        return session, payload


def snapshot(session: Session) -> dict:
    status = game_status(session.board)
    return {
        "id": session.id,
        "size": session.board.size,
        "cells": [int(v) for v in session.board.cells.ravel()],
        "history": [
            {"row": p.row, "col": p.col, "player": player}
            for p, player in session.board.history
        ],
        "to_move": session.board.side_to_move,
        "human": session.human,
        "backend": session.backend_tag,
        "status": {
            "state": status.state,
            "winner": status.winner,
            "line": [[p.row, p.col] for p in status.line],
        },
        "version": session.version,
        "created_at": session.created_at,
    }


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    arena = Arena(config)
    app = FastAPI(title="gomoku-agent arena")
    app.state.arena = arena

    @app.exception_handler(ServiceError)
    async def service_error_handler(_req: Request, exc: ServiceError):
        return JSONResponse(
            {"error": exc.code, "message": str(exc)}, status_code=exc.status
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            {"error": "bad_request", "message": str(exc.errors()[:3])}, status_code=400
        )

    @app.post("/sessions")
    def post_session(req: CreateSessionRequest):
        session = arena.create_session(req)
        return snapshot(session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        return snapshot(arena._get_session(sid))

    @app.post("/sessions/{sid}/moves")
    def post_move(sid: str, req: MoveRequest):
        return snapshot(arena.submit_human_move(sid, req.row, req.col))

    @app.post("/sessions/{sid}/ai-move")
    def post_ai_move(sid: str):
        _session, payload = arena.request_ai_move(sid)
        return payload

    @app.get("/sessions/{sid}/events")
    async def get_events(sid: str):
        session = arena._get_session(sid)
        sub = _Subscriber(asyncio.get_running_loop(), asyncio.Queue())
        session.subscribers.append(sub)

        async def stream():
            try:
                yield _sse("snapshot", snapshot(session))
                while True:
                    try:
                        event, data = await asyncio.wait_for(sub.queue.get(), 15.0)
                    except asyncio.TimeoutError:
                        yield ": keepalive\n\n"
                        continue
                    yield _sse(event, data)
            finally:
                if sub in session.subscribers:
                    session.subscribers.remove(sub)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/games")
    def get_games():
        if not config.store_path or not Path(config.store_path).exists():
            return {"games": []}
        return {"games": replay_mod.list_games(config.store_path)}

    @app.get("/games/{game_id}/replay")
    def get_replay(game_id: int):
        if not config.store_path or not Path(config.store_path).exists():
            raise _err("unknown_game", "service has no store configured", 404)
        try:
            game = replay_mod.load_game_replay(config.store_path, game_id, arena.catalog)
        except replay_mod.UnknownGameError as exc:
            raise _err("unknown_game", str(exc), 404)
        return {
            "game_id": game.game_id,
            "board_size": game.board_size,
            "outcome": game.outcome,
            "winner": game.winner,
            "turns": [
                {
                    "turn": t.turn,
                    "player": t.player,
                    "row": t.position.row,
                    "col": t.position.col,
                    "strategy": t.strategy,
                    "logic": t.logic,
                    "reward": t.reward,
                    "done": t.done,
                }
                for t in game.turns
            ],
        }

    @app.get("/stats")
    def get_stats():
        out: dict[str, Any] = {"games": 0, "transitions": 0}
        if config.store_path and Path(config.store_path).exists():
            records, truncated = load_transitions(config.store_path)
            out["transitions"] = len(records)
            out["games"] = len({r.game_id for r in records})
            out["dropped_partial_records"] = truncated
        if config.checkpoint_path:
            sidecar = Path(config.checkpoint_path + ".stats.json")
            if sidecar.exists():
                out["training"] = json.loads(sidecar.read_text("utf-8"))
        return out

    ui_dir = config.ui_dir
    if ui_dir is None:
        bundled = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = str(bundled) if bundled.exists() else None
    if ui_dir and Path(ui_dir).exists():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def _sse(event: str, data: dict) -> str:
    return f"event: {event}\ndata: {json.dumps(data)}\n\n"


def serve(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=port, log_level="warning")
