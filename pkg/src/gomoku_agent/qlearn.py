"""Deep Q-learning over the strategy/logic action space.

The network is a three-affine-layer MLP (two ReLU hidden layers) written
directly in numpy with hand-derived gradients, trained by plain SGD on
the squared TD error. States are mover-perspective board vectors; actions
index (strategy, logic) pairs, so there are no illegal actions to mask.

Parameters default to float32 so checkpoints round-trip bit-for-bit;
pass dtype=np.float64 where numeric tests need tighter precision.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import Board


class QLearnError(Exception):
    code = "qlearn_error"


class DimensionMismatchError(QLearnError):
    code = "dimension_mismatch"


class BufferTooSmallError(QLearnError):
    code = "buffer_too_small"


@dataclass
class TrainConfig:
    gamma: float = 0.95
    lr: float = 1e-3
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 10_000
    batch_size: int = 64
    target_sync_interval: int = 500
    h1: int = 512
    h2: int = 256
    replay_capacity: int = 50_000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if min(self.lr, self.batch_size, self.target_sync_interval,
               self.h1, self.h2, self.replay_capacity, self.epsilon_decay_steps) <= 0:
            raise ValueError("all positive hyperparameters must be > 0")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ValueError("need 0 <= epsilon_end <= epsilon_start <= 1")

    def epsilon_at(self, selections: int) -> float:
        frac = min(1.0, selections / self.epsilon_decay_steps)
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac


@dataclass
class Transition:
    game_id: int
    turn: int
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


def encode_state(board: Board, mover: int) -> np.ndarray:
    """Mover-perspective board vector: the mover's stones become +1."""
    return (board.cells.ravel() * mover).astype(np.float32)


class QNetwork:
    """dims: in -> h1 -> h2 -> actions, ReLU between the affine layers."""

    def __init__(self, in_dim: int, h1: int, h2: int, out_dim: int,
                 seed: int | None = 0, dtype=np.float32):
        self.dims = (in_dim, h1, h2, out_dim)
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.dims[:-1], self.dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(
                rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(self.dtype)
            )
            self.biases.append(np.zeros(fan_out, dtype=self.dtype))

    @property
    def out_dim(self) -> int:
        return self.dims[-1]

    def forward_batch(self, states: np.ndarray) -> np.ndarray:
        x = np.asarray(states, dtype=self.dtype)
        if x.ndim != 2 or x.shape[1] != self.dims[0]:
            raise DimensionMismatchError(
                f"expected (*, {self.dims[0]}) states, got {x.shape}"
            )
        h = np.maximum(x @ self.weights[0] + self.biases[0], 0)
        h = np.maximum(h @ self.weights[1] + self.biases[1], 0)
        return h @ self.weights[2] + self.biases[2]

    def forward(self, state: np.ndarray) -> np.ndarray:
        return self.forward_batch(np.asarray(state, dtype=self.dtype)[None, :])[0]

    def parameters(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def copy(self) -> "QNetwork":
        clone = QNetwork.__new__(QNetwork)
        clone.dims = self.dims
        clone.dtype = self.dtype
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def load_params(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        for mine, theirs in zip(self.weights + self.biases, list(weights) + list(biases)):
            if mine.shape != theirs.shape:
                raise DimensionMismatchError(
                    f"parameter shape {theirs.shape} != expected {mine.shape}"
                )
            mine[...] = theirs


def q_forward(net: QNetwork, state: np.ndarray) -> np.ndarray:
    return net.forward(state)


def select_action(net: QNetwork, state: np.ndarray, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy action; greedy ties break to the smallest index.

    epsilon == 0 consumes no randomness, so evaluation runs are pure.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(net.out_dim))
    return int(np.argmax(net.forward(state)))


def td_targets(target: QNetwork, batch: Sequence[Transition], gamma: float) -> np.ndarray:
    next_states = np.stack([t.next_state for t in batch])
    bootstrap = target.forward_batch(next_states).max(axis=1)
    rewards = np.array([t.reward for t in batch], dtype=target.dtype)
    live = np.array([0.0 if t.done else 1.0 for t in batch], dtype=target.dtype)
    return rewards + gamma * bootstrap * live


def loss_and_grads(net: QNetwork, target: QNetwork, batch: Sequence[Transition],
                   cfg: TrainConfig):
    """Mean squared TD error and its gradient w.r.t. every net parameter."""
    if not batch:
        raise ValueError("batch must be nonempty")
    x = np.stack([t.state for t in batch]).astype(net.dtype)
    actions = np.array([t.action for t in batch])
    y = td_targets(target, batch, cfg.gamma)

    w1, w2, w3 = net.weights
    b1, b2, b3 = net.biases
    z1 = x @ w1 + b1
    h1 = np.maximum(z1, 0)
    z2 = h1 @ w2 + b2
    h2 = np.maximum(z2, 0)
    q = h2 @ w3 + b3

    n = len(batch)
    picked = q[np.arange(n), actions]
    err = picked - y
    loss = float(np.mean(err.astype(np.float64) ** 2))

    dq = np.zeros_like(q)
    dq[np.arange(n), actions] = (2.0 / n) * err
    dw3 = h2.T @ dq
    db3 = dq.sum(axis=0)
    dh2 = dq @ w3.T
    dz2 = dh2 * (z2 > 0)
    dw2 = h1.T @ dz2
    db2 = dz2.sum(axis=0)
    dh1 = dz2 @ w2.T
    dz1 = dh1 * (z1 > 0)
    dw1 = x.T @ dz1
    db1 = dz1.sum(axis=0)
    return loss, [dw1, db1, dw2, db2, dw3, db3]


def train_step(net: QNetwork, target: QNetwork, batch: Sequence[Transition],
               cfg: TrainConfig) -> float:
    """One SGD step on the TD loss; returns the pre-step loss."""
    loss, grads = loss_and_grads(net, target, batch, cfg)
    lr = net.dtype.type(cfg.lr)
    for param, grad in zip(net.parameters(), grads):
        param -= lr * grad.astype(net.dtype)
    return loss


def sync_target(net: QNetwork, target: QNetwork) -> None:
    """Copy net parameters into target, exactly."""
    if net.dims != target.dims:
        raise DimensionMismatchError(f"net dims {net.dims} != target dims {target.dims}")
    target.load_params(net.weights, net.biases)


class ReplayBuffer:
    """FIFO transition store with uniform with-replacement sampling."""

    def __init__(self, capacity: int):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._entries: deque[Transition] = deque(maxlen=capacity)

    def push(self, transition: Transition) -> None:
        self._entries.append(transition)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if len(self._entries) < batch_size:
            raise BufferTooSmallError(
                f"buffer holds {len(self._entries)} < batch size {batch_size}"
            )
        picks = rng.integers(len(self._entries), size=batch_size)
        return [self._entries[int(i)] for i in picks]

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)
