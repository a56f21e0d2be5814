"""Position evaluators: a deterministic heuristic oracle and a remote
chat-completion client, behind one capability surface.

A backend can propose a move, score a single position on a 0-100 scale,
and estimate both sides' win rates. The heuristic backend is a pure
function of its inputs and is used as the offline opponent, the test
oracle, and the default arena AI; the LLM backend renders prompts and
parses the replies, with retry/backoff around the HTTP call.
"""

from __future__ import annotations

import math
import os
import threading
import time
from dataclasses import dataclass
from typing import Protocol

import numpy as np
import requests

from . import _kernels, prompting
from .catalog import Logic, Strategy
from .engine import Board, Position, game_status, IN_PROGRESS

DEFENSE_WEIGHT = 0.8
RAW_SCALE = 100_000.0  # raw score that saturates the 0-100 scale
LOGISTIC_SCALE = 10_000.0  # spread of the win-rate logistic

RETRYABLE_STATUSES = {429} | set(range(500, 600))


class EvaluationError(Exception):
    code = "evaluation_error"


class IllegalPositionError(EvaluationError):
    code = "illegal_position"


class BoardFullError(EvaluationError):
    code = "board_full"


class LlmError(EvaluationError):
    code = "llm_error"


class LlmTimeoutError(LlmError):
    code = "timeout"


class RateLimitedError(LlmError):
    code = "rate_limited"


class AuthError(LlmError):
    code = "auth_error"


class MalformedResponseError(LlmError):
    code = "malformed_response"


class RetriesExhaustedError(LlmError):
    code = "retries_exhausted"


@dataclass(frozen=True)
class WinRates:
    p_mover: float
    p_opponent: float


class EvaluatorBackend(Protocol):
    """Capability bundle shared by all evaluators."""

    tag: str

    def propose_move(
        self, board: Board, player: int,
        strategy: Strategy | None = None, logic: Logic | None = None,
    ) -> Position: ...

    def score_position(self, board: Board, pos: Position, player: int) -> float: ...

    def estimate_win_rates(self, board: Board, mover: int) -> WinRates: ...


# ---------------------------------------------------------------------------
# Heuristic backend


def heuristic_score_position(
    board: Board, pos: Position, player: int, *, defense_weight: float = DEFENSE_WEIGHT
) -> float:
    """Deterministic 0-100 score for placing `player`'s stone at `pos`.

    raw = attack + defense_weight * defense + centrality, where attack and
    defense sum the pattern weights the move creates for each color and
    centrality is size minus Chebyshev distance to the board center;
    score = min(100, 100 * raw / 100000).
    """
    pos = Position(int(pos[0]), int(pos[1]))
    if not board.in_bounds(pos) or board.cells[pos.row, pos.col] != 0:
        raise IllegalPositionError(f"{pos} is not an empty in-bounds cell")
    raw = _kernels.position_raw(board.cells, pos.row, pos.col, player, defense_weight)
    return min(100.0, 100.0 * raw / RAW_SCALE)


def heuristic_propose_move(
    board: Board, player: int, *, defense_weight: float = DEFENSE_WEIGHT
) -> Position:
    """Highest-scoring legal position, smallest row-major index on ties."""
    raw = _kernels.raw_grid(board.cells, player, defense_weight)
    flat = raw.ravel()
    empty = flat >= 0.0  # occupied cells are marked -1
    if not empty.any():
        raise BoardFullError("no legal positions left")
    scores = np.where(empty, np.minimum(100.0, flat * (100.0 / RAW_SCALE)), -np.inf)
    idx = int(np.argmax(scores))  # argmax takes the first (row-major) maximum
    return Position(idx // board.size, idx % board.size)


def heuristic_win_rates(board: Board, mover: int) -> WinRates:
    best_mover = _kernels.best_attack(board.cells, mover)
    best_opp = _kernels.best_attack(board.cells, -mover)
    p = 1.0 / (1.0 + math.exp(-(best_mover - best_opp) / LOGISTIC_SCALE))
    return WinRates(p, 1.0 - p)


class HeuristicBackend:
    """Pure local evaluator; safe for unlimited concurrent use."""

    tag = "heuristic"

    def __init__(self, defense_weight: float = DEFENSE_WEIGHT):
        self.defense_weight = defense_weight

    def propose_move(self, board, player, strategy=None, logic=None) -> Position:
        return heuristic_propose_move(board, player, defense_weight=self.defense_weight)

    def score_position(self, board, pos, player) -> float:
        return heuristic_score_position(
            board, pos, player, defense_weight=self.defense_weight
        )

    def estimate_win_rates(self, board, mover) -> WinRates:
        return heuristic_win_rates(board, mover)


# ---------------------------------------------------------------------------
# LLM backend


@dataclass
class LlmConfig:
    endpoint: str
    model: str
    temperature: float = 0.0
    timeout: float = 30.0
    max_retries: int = 3
    backoff_base_ms: int = 250
    token_env: str = "GOMOKU_LLM_TOKEN"
    max_in_flight: int = 8

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


def llm_complete(config: LlmConfig, prompt: str, *, session=None, sleep=time.sleep) -> str:
    """POST a chat-completion request, retrying 429/5xx/timeouts with
    exponential backoff; returns the reply text."""
    post = (session or requests).post
    headers = {}
    token = os.environ.get(config.token_env, "")
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = {
        "model": config.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": config.temperature,
    }

    last_error: LlmError | None = None
    for attempt in range(config.max_retries + 1):
        if attempt > 0:
            sleep(config.backoff_base_ms * (2 ** (attempt - 1)) / 1000.0)
        try:
            resp = post(config.endpoint, json=body, headers=headers, timeout=config.timeout)
        except requests.Timeout as exc:
            last_error = LlmTimeoutError(f"request timed out after {config.timeout}s")
            last_error.__cause__ = exc
            continue
        except requests.ConnectionError as exc:
            last_error = LlmTimeoutError(f"connection failed: {exc}")
            last_error.__cause__ = exc
            continue
        if resp.status_code in (401, 403):
            raise AuthError(f"authentication rejected (HTTP {resp.status_code})")
        if resp.status_code in RETRYABLE_STATUSES:
            last_error = RateLimitedError(f"HTTP {resp.status_code} from endpoint")
            continue
        if resp.status_code != 200:
            raise MalformedResponseError(f"unexpected HTTP {resp.status_code}")
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"reply body not understood: {exc}") from exc
        if not isinstance(content, str):
            raise MalformedResponseError("reply content is not text")
        return content

    raise RetriesExhaustedError(
        f"gave up after {config.max_retries + 1} attempts: {last_error}"
    ) from last_error


class LlmBackend:
    """Chat-completion evaluator; bounds in-flight requests with a semaphore."""

    tag = "llm"

    def __init__(
        self,
        config: LlmConfig,
        template: prompting.PromptTemplate | None = None,
        rules_text: str | None = None,
        sleep=time.sleep,
    ):
        self.config = config
        self.template = template or prompting.default_template()
        self.rules_text = rules_text if rules_text is not None else prompting.default_rules_text()
        self._sleep = sleep
        self._session = requests.Session()
        self._gate = threading.BoundedSemaphore(config.max_in_flight)

    def _complete(self, prompt: str) -> str:
        with self._gate:
            return llm_complete(self.config, prompt, session=self._session, sleep=self._sleep)

    def propose_move(self, board, player, strategy=None, logic=None) -> Position:
        if strategy is None or logic is None:
            raise ValueError("llm backend needs a strategy and logic to prompt with")
        prompt = prompting.render_move_prompt(
            self.template, self.rules_text, board, player, strategy, logic
        )
        proposal = self.propose_from_reply(self._complete(prompt), board.size)
        return proposal.position

    @staticmethod
    def propose_from_reply(reply: str, size: int) -> prompting.MoveProposal:
        return prompting.MoveProposal(prompting.parse_position(reply, size), reply)

    def score_position(self, board, pos, player) -> float:
        prompt = prompting.render_score_prompt(board, pos, player)
        return prompting.parse_score(self._complete(prompt))

    def estimate_win_rates(self, board, mover) -> WinRates:
        prompt = prompting.render_win_rate_prompt(board, mover)
        p_mover, p_opp = prompting.parse_win_rates(self._complete(prompt))
        return WinRates(p_mover, p_opp)


def estimate_win_rates(backend: EvaluatorBackend, board: Board, mover: int) -> WinRates:
    if game_status(board).state != IN_PROGRESS:
        raise EvaluationError("win rates are only defined for games in progress")
    rates = backend.estimate_win_rates(board, mover)
    total = rates.p_mover + rates.p_opponent
    if rates.p_mover < 0 or rates.p_opponent < 0 or abs(total - 1.0) > 1e-6:
        raise EvaluationError(f"backend returned invalid win rates: {rates}")
    return rates


def make_backend(tag: str, llm_config: LlmConfig | None = None) -> EvaluatorBackend:
    if tag == "heuristic":
        return HeuristicBackend()
    if tag == "llm":
        if llm_config is None:
            raise ValueError("llm backend requires an LlmConfig")
        return LlmBackend(llm_config)
    raise ValueError(f"unknown backend tag {tag!r}")
