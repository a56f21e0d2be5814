import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from _helpers import board_from_stones, oracle_score, random_inprogress_board
from gomoku_agent.engine import BLACK, WHITE, Position, legal_positions, new_board
from gomoku_agent.evaluation import (
    AuthError,
    BoardFullError,
    HeuristicBackend,
    IllegalPositionError,
    LlmBackend,
    LlmConfig,
    MalformedResponseError,
    RetriesExhaustedError,
    WinRates,
    estimate_win_rates,
    heuristic_propose_move,
    heuristic_score_position,
    heuristic_win_rates,
    llm_complete,
)


# ---------------------------------------------------------------------------
# scripted chat-completion stub


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        server = self.server
        step = min(server.hits, len(server.script) - 1)
        status, payload = server.script[step]
        server.hits += 1
        length = int(self.headers.get("Content-Length", 0))
        server.requests.append(json.loads(self.rfile.read(length) or b"{}"))
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


def _reply(text):
    return {"choices": [{"message": {"content": text}}]}


class StubServer:
    def __init__(self, script):
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
        self.server.script = script
        self.server.hits = 0
        self.server.requests = []
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self):
        return f"http://127.0.0.1:{self.server.server_port}/v1/chat/completions"

    @property
    def hits(self):
        return self.server.hits

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub(request):
    servers = []

    def make(script):
        server = StubServer(script)
        servers.append(server)
        return server

    yield make
    for server in servers:
        server.close()


def _config(url, retries=3):
    return LlmConfig(endpoint=url, model="test-model", max_retries=retries,
                     backoff_base_ms=1)


# ---------------------------------------------------------------------------
# heuristic scoring


class TestHeuristicScore:
    def test_completing_five_saturates(self):
        board = board_from_stones(15, black=[(7, 3), (7, 4), (7, 5), (7, 6)])
        assert heuristic_score_position(board, Position(7, 7), BLACK) == 100.0
        assert heuristic_score_position(board, Position(7, 2), BLACK) == 100.0

    def test_empty_board_center_exact(self):
        # only the centrality term fires: 100 * 15 / 100000
        score = heuristic_score_position(new_board(15), Position(7, 7), BLACK)
        assert score == pytest.approx(0.015, abs=1e-12)
        assert score == oracle_score(new_board(15), Position(7, 7), BLACK)

    def test_blocking_open_three_scores_near_eight(self):
        # white would complete an open four at (7,3); black blocking there
        # has no pattern of its own, so 0.8 * 10000 dominates
        board = board_from_stones(15, white=[(7, 4), (7, 5), (7, 6)])
        score = heuristic_score_position(board, Position(7, 3), BLACK)
        centrality = 15 - max(abs(7 - 7), abs(3 - 7))
        assert score == pytest.approx((0.8 * 10_000 + centrality) * 100 / 100_000)
        assert score == oracle_score(board, Position(7, 3), BLACK)

    def test_matches_string_oracle_on_random_boards(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            board = random_inprogress_board(rng, size=11)
            empties = legal_positions(board)
            picks = rng.choice(len(empties), size=min(12, len(empties)), replace=False)
            for i in picks:
                pos = empties[int(i)]
                for player in (BLACK, WHITE):
                    got = heuristic_score_position(board, pos, player)
                    assert got == pytest.approx(oracle_score(board, pos, player))

    def test_color_symmetry(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            board = random_inprogress_board(rng, size=9)
            flipped = board_from_stones(
                9,
                black=[tuple(p) for p in np.argwhere(board.cells == -1)],
                white=[tuple(p) for p in np.argwhere(board.cells == 1)],
            )
            pos = legal_positions(board)[0]
            a = heuristic_score_position(board, pos, BLACK)
            b = heuristic_score_position(flipped, pos, WHITE)
            assert a == b

    def test_pure_function(self):
        board = board_from_stones(15, black=[(3, 3)], white=[(4, 4)])
        first = heuristic_score_position(board, Position(3, 4), BLACK)
        for _ in range(5):
            assert heuristic_score_position(board, Position(3, 4), BLACK) == first

    def test_illegal_position_rejected(self):
        board = board_from_stones(15, black=[(7, 7)])
        with pytest.raises(IllegalPositionError):
            heuristic_score_position(board, Position(7, 7), WHITE)
        with pytest.raises(IllegalPositionError):
            heuristic_score_position(board, Position(-1, 0), BLACK)


class TestHeuristicPropose:
    def test_completes_own_four(self):
        board = board_from_stones(
            15, black=[(5, 5), (5, 6), (5, 7), (5, 8), (10, 1)],
            white=[(5, 4), (9, 9), (9, 10), (9, 11)],
        )
        # (5,9) completes five for black (other end blocked by white at (5,4))
        assert heuristic_propose_move(board, BLACK) == Position(5, 9)

    def test_empty_board_center(self):
        assert heuristic_propose_move(new_board(15), BLACK) == Position(7, 7)

    def test_full_board_raises(self):
        cells = np.ones((5, 5), dtype=np.int8)
        cells[::2] = -1
        from gomoku_agent.engine import Board

        with pytest.raises(BoardFullError):
            heuristic_propose_move(Board(5, cells, ()), BLACK)

    def test_always_legal_fuzz(self):
        rng = np.random.default_rng(8)
        for _ in range(400):
            board = random_inprogress_board(rng, size=9)
            move = heuristic_propose_move(board, board.side_to_move)
            assert board.cells[move.row, move.col] == 0

    def test_tie_break_row_major(self):
        # two symmetric five-completions both score 100; the smaller
        # row-major index must win
        board = board_from_stones(
            15,
            black=[(3, 5), (3, 6), (3, 7), (3, 8), (11, 5), (11, 6), (11, 7), (11, 8)],
        )
        move = heuristic_propose_move(board, BLACK)
        assert move == Position(3, 4)


class TestWinRatesHeuristic:
    def test_symmetric_empty_board(self):
        rates = heuristic_win_rates(new_board(15), BLACK)
        assert rates.p_mover == pytest.approx(0.5, abs=1e-6)
        assert rates.p_mover + rates.p_opponent == pytest.approx(1.0, abs=1e-12)

    def test_open_four_dominates(self):
        board = board_from_stones(
            15, black=[(7, 2), (7, 3), (7, 4), (7, 5)], white=[(2, 2), (2, 3)]
        )
        rates = heuristic_win_rates(board, BLACK)
        expected = 1.0 / (1.0 + math.exp(-(100_000 - 2_000) / 10_000))
        assert rates.p_mover == pytest.approx(expected)
        assert rates.p_mover > 0.7

    def test_invariants_on_random_boards(self):
        rng = np.random.default_rng(9)
        backend = HeuristicBackend()
        for _ in range(50):
            board = random_inprogress_board(rng, size=9)
            rates = estimate_win_rates(backend, board, board.side_to_move)
            assert rates.p_mover >= 0 and rates.p_opponent >= 0
            assert rates.p_mover + rates.p_opponent == pytest.approx(1.0, abs=1e-6)


# ---------------------------------------------------------------------------
# llm client


class TestLlmComplete:
    def test_passthrough(self, stub):
        server = stub([(200, _reply("answer: (7,7)"))])
        assert llm_complete(_config(server.url), "hi") == "answer: (7,7)"
        assert server.hits == 1

    def test_retry_then_success(self, stub):
        server = stub([(429, {}), (500, {}), (200, _reply("ok"))])
        sleeps = []
        out = llm_complete(_config(server.url, retries=3), "hi", sleep=sleeps.append)
        assert out == "ok"
        assert server.hits == 3
        assert sleeps == [0.001, 0.002]  # exponential backoff, base 1 ms

    def test_retries_exhausted(self, stub):
        server = stub([(429, {})])
        with pytest.raises(RetriesExhaustedError):
            llm_complete(_config(server.url, retries=2), "hi", sleep=lambda _s: None)
        assert server.hits == 3  # initial try + 2 retries

    def test_auth_error_not_retried(self, stub):
        server = stub([(401, {})])
        with pytest.raises(AuthError):
            llm_complete(_config(server.url), "hi")
        assert server.hits == 1

    def test_malformed_reply(self, stub):
        server = stub([(200, {"surprise": True})])
        with pytest.raises(MalformedResponseError):
            llm_complete(_config(server.url), "hi")

    def test_request_wire_format(self, stub):
        server = stub([(200, _reply("fine"))])
        llm_complete(_config(server.url), "the prompt")
        sent = server.server.requests[0]
        assert sent["model"] == "test-model"
        assert sent["messages"] == [{"role": "user", "content": "the prompt"}]
        assert "temperature" in sent

    def test_bearer_token_from_env(self, stub, monkeypatch):
        monkeypatch.setenv("GOMOKU_LLM_TOKEN", "secret-token")
        server = stub([(200, _reply("fine"))])

        captured = {}
        orig = _StubHandler.do_POST

        def spy(handler):
            captured["auth"] = handler.headers.get("Authorization")
            orig(handler)

        monkeypatch.setattr(_StubHandler, "do_POST", spy)
        llm_complete(_config(server.url), "x")
        assert captured["auth"] == "Bearer secret-token"


class TestLlmBackend:
    def test_propose_move_roundtrip(self, stub):
        server = stub([(200, _reply("thinking... final move (4, 5)"))])
        backend = LlmBackend(_config(server.url), sleep=lambda _s: None)
        cat_strategy = __import__("gomoku_agent.catalog", fromlist=["default_catalog"])
        cat = cat_strategy.default_catalog()
        move = backend.propose_move(new_board(15), BLACK, cat.strategies[0], cat.logics[0])
        assert move == Position(4, 5)

    def test_score_position(self, stub):
        server = stub([(200, _reply("I rate this 85"))])
        backend = LlmBackend(_config(server.url), sleep=lambda _s: None)
        assert backend.score_position(new_board(15), Position(7, 7), BLACK) == 85

    def test_win_rates_parse_and_normalize(self, stub):
        server = stub([(200, _reply("Black 60%, White 40%"))])
        backend = LlmBackend(_config(server.url), sleep=lambda _s: None)
        rates = estimate_win_rates(backend, new_board(15), BLACK)
        assert rates == WinRates(0.6, 0.4)
