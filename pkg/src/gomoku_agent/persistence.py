"""Durable state-action-reward log and network checkpoints.

The transition log is an append-only text file, one record per line,
flushed and fsync'ed per record so a crash can lose at most a trailing
partial line. Loading tolerates exactly that: a partial final line is
dropped and counted, while a malformed line anywhere else is corruption
and raises. Checkpoints are written to a temp file and atomically
renamed, so an interrupted save never damages the previous one.

Record line (tab-separated):

    game_id  turn  done(0/1)  action  reward  state  next_state  timestamp_ms

where state/next_state are space-separated cell values. For a size-15
board a record stays under 2048 bytes (two 225-cell vectors at <= 3
bytes per cell plus the small fields).
"""

from __future__ import annotations

import json
import os
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .qlearn import QNetwork, Transition

CHECKPOINT_MAGIC = b"GQN1"
MAX_RECORD_BYTES = 2048  # documented bound for size-15 boards


class PersistenceError(Exception):
    code = "persistence_error"


class IoError(PersistenceError):
    code = "io_error"


class CorruptRecordError(PersistenceError):
    code = "corrupt_record"

    def __init__(self, message: str, line_no: int):
        super().__init__(message)
        self.line_no = line_no


class FormatError(PersistenceError):
    code = "format_error"


def _format_record(t: Transition, timestamp_ms: int) -> str:
    state = " ".join(str(int(v)) for v in t.state)
    next_state = " ".join(str(int(v)) for v in t.next_state)
    return (
        f"{t.game_id}\t{t.turn}\t{1 if t.done else 0}\t{t.action}\t"
        f"{t.reward!r}\t{state}\t{next_state}\t{timestamp_ms}\n"
    )


def _parse_record(line: str) -> tuple[Transition, int]:
    fields = line.rstrip("\n").split("\t")
    if len(fields) != 8:
        raise ValueError(f"expected 8 fields, got {len(fields)}")
    game_id, turn, done, action = (int(fields[i]) for i in range(4))
    if done not in (0, 1):
        raise ValueError("done flag must be 0 or 1")
    reward = float(fields[4])
    state = np.array([int(v) for v in fields[5].split(" ")], dtype=np.float32)
    next_state = np.array([int(v) for v in fields[6].split(" ")], dtype=np.float32)
    if len(state) != len(next_state) or len(state) == 0:
        raise ValueError("state vectors empty or of unequal length")
    timestamp = int(fields[7])
    return Transition(game_id, turn, state, action, reward, next_state, bool(done)), timestamp


class TransitionLog:
    """Single-writer append handle over the record file.

    timestamp_mode "wall" stamps real unix milliseconds; "logical" stamps
    the record ordinal instead, which keeps seeded self-play runs (and
    their resumed reruns) byte-identical.
    """

    def __init__(self, path: str | Path, timestamp_mode: str = "wall"):
        if timestamp_mode not in ("wall", "logical"):
            raise ValueError(f"unknown timestamp_mode {timestamp_mode!r}")
        self.path = Path(path)
        self.timestamp_mode = timestamp_mode
        try:
            records, truncated = (
                load_transitions(self.path) if self.path.exists() else ([], 0)
            )
            if truncated:
                _truncate_to_complete_lines(self.path)
            self.count = len(records)
            self._last = (records[-1].game_id, records[-1].turn) if records else None
            self._handle = open(self.path, "a", encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot open log {self.path}: {exc}") from exc

    def append(self, t: Transition) -> None:
        ts = self.count if self.timestamp_mode == "logical" else time.time_ns() // 1_000_000
        line = _format_record(t, ts)
        try:
            self._handle.write(line)
            self._handle.flush()
            os.fsync(self._handle.fileno())
        except OSError as exc:
            raise IoError(f"append to {self.path} failed: {exc}") from exc
        self.count += 1
        self._last = (t.game_id, t.turn)

    @property
    def cursor(self) -> tuple[int, int] | None:
        """(game_id, turn) of the last complete record, or None."""
        return self._last

    def close(self) -> None:
        self._handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def append_transition(log: TransitionLog, t: Transition) -> None:
    log.append(t)


def load_transitions(path: str | Path) -> tuple[list[Transition], int]:
    """All complete records in order, plus how many trailing partial
    records were dropped (0 or 1 by construction)."""
    path = Path(path)
    try:
        data = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        return [], 0
    except OSError as exc:
        raise IoError(f"cannot read log {path}: {exc}") from exc

    if not data:
        return [], 0
    lines = data.split("\n")
    trailing_newline = data.endswith("\n")
    if trailing_newline:
        lines = lines[:-1]  # drop the empty string after the final newline

    records: list[Transition] = []
    truncated = 0
    for idx, line in enumerate(lines):
        last = idx == len(lines) - 1
        try:
            record, _ = _parse_record(line)
        except ValueError as exc:
            if last:
                truncated = 1  # torn final write; drop it
                break
            raise CorruptRecordError(
                f"line {idx + 1} of {path} is malformed: {exc}", idx + 1
            ) from exc
        if last and not trailing_newline:
            truncated = 1  # parsed but never newline-terminated: torn write
            break
        records.append(record)
    return records, truncated


def resume_cursor(path: str | Path) -> tuple[int, int] | None:
    records, _ = load_transitions(path)
    if not records:
        return None
    return records[-1].game_id, records[-1].turn


def _truncate_to_complete_lines(path: Path) -> None:
    """Drop a trailing partial line so appends start on a clean boundary."""
    with open(path, "rb") as fh:
        data = fh.read()
    end = data.rfind(b"\n") + 1
    good = data[:end]
    # A newline-terminated but unparseable final line is torn too.
    while good:
        head = good[:-1].rfind(b"\n") + 1
        try:
            _parse_record(good[head:].decode("utf-8"))
            break
        except (ValueError, UnicodeDecodeError):
            good = good[:head]
    if len(good) != len(data):
        with open(path, "r+b") as fh:
            fh.truncate(len(good))


def trim_incomplete_game(path: str | Path) -> tuple[int, int]:
    """Remove trailing records of a game that never finished.

    A finished game's final record carries done=1. Returns (records kept,
    records dropped). Used on resume so the unfinished game is replayed
    from scratch and (game_id, turn) ordering stays strict.
    """
    path = Path(path)
    records, truncated = load_transitions(path)
    if truncated:
        _truncate_to_complete_lines(path)
    if not records:
        return 0, 0
    last_game = records[-1].game_id
    if records[-1].done:
        return len(records), 0
    keep = len(records)
    while keep > 0 and records[keep - 1].game_id == last_game:
        keep -= 1
    _rewrite_prefix(path, keep)
    return keep, len(records) - keep


def _rewrite_prefix(path: Path, keep_records: int) -> None:
    with open(path, "rb") as fh:
        data = fh.read()
    offset = 0
    for _ in range(keep_records):
        offset = data.index(b"\n", offset) + 1
    with open(path, "r+b") as fh:
        fh.truncate(offset)


# ---------------------------------------------------------------------------
# Checkpoints


@dataclass
class Checkpoint:
    net: QNetwork
    target: QNetwork
    train_steps: int
    selections: int  # epsilon-schedule position
    last_game_id: int
    rng_state: dict


def _write_network(fh, net: QNetwork) -> None:
    for w, b in zip(net.weights, net.biases):
        fh.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(b, dtype="<f4").tobytes())


def _read_network(fh, dims: list[tuple[int, int]]) -> QNetwork:
    layer_sizes = [dims[0][0]] + [cols for _, cols in dims]
    net = QNetwork(layer_sizes[0], layer_sizes[1], layer_sizes[2], layer_sizes[3], seed=None)
    weights, biases = [], []
    for rows, cols in dims:
        w = np.frombuffer(fh.read(4 * rows * cols), dtype="<f4").reshape(rows, cols)
        b = np.frombuffer(fh.read(4 * cols), dtype="<f4")
        if w.size != rows * cols or b.size != cols:
            raise FormatError("checkpoint ends mid-network")
        weights.append(w.copy())
        biases.append(b.copy())
    net.load_params(weights, biases)
    return net


def save_checkpoint(cp: Checkpoint, path: str | Path) -> None:
    """Write to a temp file, fsync, then atomically rename over `path`."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    meta = json.dumps(
        {
            "train_steps": cp.train_steps,
            "selections": cp.selections,
            "last_game_id": cp.last_game_id,
            "rng_state": cp.rng_state,
        }
    ).encode("utf-8")
    try:
        with open(tmp, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<I", len(cp.net.weights)))
            for w in cp.net.weights:
                fh.write(struct.pack("<II", w.shape[0], w.shape[1]))
            _write_network(fh, cp.net)
            _write_network(fh, cp.target)
            fh.write(struct.pack("<I", len(meta)))
            fh.write(meta)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write checkpoint {path}: {exc}") from exc


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            if fh.read(4) != CHECKPOINT_MAGIC:
                raise FormatError(f"{path} has wrong magic")
            (n_layers,) = struct.unpack("<I", fh.read(4))
            if not 1 <= n_layers <= 16:
                raise FormatError(f"implausible layer count {n_layers}")
            dims = []
            for _ in range(n_layers):
                rows, cols = struct.unpack("<II", fh.read(8))
                if rows == 0 or cols == 0 or rows * cols > 10**8:
                    raise FormatError(f"implausible layer dims {rows}x{cols}")
                dims.append((rows, cols))
            for prev, nxt in zip(dims[:-1], dims[1:]):
                if prev[1] != nxt[0]:
                    raise FormatError(f"layer dims do not chain: {dims}")
            if n_layers != 3:
                raise FormatError(f"expected a 3-layer network, got {n_layers}")
            net = _read_network(fh, dims)
            target = _read_network(fh, dims)
            (meta_len,) = struct.unpack("<I", fh.read(4))
            meta = json.loads(fh.read(meta_len).decode("utf-8"))
    except FileNotFoundError as exc:
        raise IoError(f"checkpoint {path} not found") from exc
    except (struct.error, ValueError) as exc:
        raise FormatError(f"checkpoint {path} is malformed: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read checkpoint {path}: {exc}") from exc
    return Checkpoint(
        net=net,
        target=target,
        train_steps=int(meta["train_steps"]),
        selections=int(meta["selections"]),
        last_game_id=int(meta["last_game_id"]),
        rng_state=meta["rng_state"],
    )
