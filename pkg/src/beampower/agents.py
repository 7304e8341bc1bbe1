"""Decision engines' learning machinery: a small fully-connected Q-network
trained by plain SGD on replayed experience, and a discretised Q-table.

The network is deliberately hand-rolled in numpy so its gradient path is
fully owned and can be checked against finite differences.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import NetworkConfig
from .geometry import Layout


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass(frozen=True)
class Experience:
    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool


@dataclass
class PolicyState:
    """Epsilon-greedy schedule and discount; epsilon decays once per step."""

    epsilon: float = 1.0
    decay: float = 0.9995
    eps_min: float = 0.1
    discount: float = 0.995

    @classmethod
    def from_config(cls, config: NetworkConfig) -> "PolicyState":
        return cls(epsilon=config.eps_initial, decay=config.eps_decay,
                   eps_min=config.eps_min, discount=config.discount)


def decay_epsilon(policy: PolicyState) -> PolicyState:
    policy.epsilon = max(policy.epsilon * policy.decay, policy.eps_min)
    return policy


class QNetwork:
    """[n_in, H, H, n_out] perceptron, sigmoid hidden units, linear output."""

    def __init__(self, w1, b1, w2, b2, w3, b3):
        self.w1, self.b1 = w1, b1
        self.w2, self.b2 = w2, b2
        self.w3, self.b3 = w3, b3

    @classmethod
    def initialize(cls, rng: np.random.Generator, n_in: int = 8, width: int = 24,
                   n_out: int = 16) -> "QNetwork":
        """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
        def glorot(n_out_, n_in_):
            lim = math.sqrt(6.0 / (n_in_ + n_out_))
            return rng.uniform(-lim, lim, size=(n_out_, n_in_))
        return cls(glorot(width, n_in), np.zeros(width),
                   glorot(width, width), np.zeros(width),
                   glorot(n_out, width), np.zeros(n_out))

    @property
    def n_in(self) -> int:
        return self.w1.shape[1]

    @property
    def n_out(self) -> int:
        return self.w3.shape[0]

    def forward(self, s: np.ndarray) -> np.ndarray:
        """Action values for one state."""
        s = np.asarray(s, dtype=float)
        if s.shape != (self.n_in,):
            raise ValueError(f"state must have shape ({self.n_in},), got {s.shape}")
        h1 = _sigmoid(self.w1 @ s + self.b1)
        h2 = _sigmoid(self.w2 @ h1 + self.b2)
        return self.w3 @ h2 + self.b3

    def forward_batch(self, states: np.ndarray) -> np.ndarray:
        states = np.asarray(states, dtype=float)
        h1 = _sigmoid(states @ self.w1.T + self.b1)
        h2 = _sigmoid(h1 @ self.w2.T + self.b2)
        return h2 @ self.w3.T + self.b3

    def params(self):
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    def copy(self) -> "QNetwork":
        return QNetwork(*[p.copy() for p in self.params()])


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def select_action(net: QNetwork, s: np.ndarray, policy: PolicyState,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy over the network's action values; greedy ties take the
    lowest index."""
    if rng.random() < policy.epsilon:
        return int(rng.integers(net.n_out))
    return int(np.argmax(net.forward(s)))


def bellman_target(r: float, s_next: np.ndarray, terminal: bool, net: QNetwork,
                   discount: float) -> float:
    """r for terminal transitions, else r + discount * max_a' Q(s', a')."""
    if terminal:
        return r
    return r + discount * float(np.max(net.forward(s_next)))


def sgd_step(net: QNetwork, minibatch: list[Experience], discount: float,
             eta: float) -> tuple[QNetwork, float]:
    """One SGD step on the mean squared Bellman error of the minibatch.

    Targets are computed with the current parameters and treated as
    constants; the gradient flows only through the predictions.  The
    network is updated in place and returned together with the loss.
    """
    n = len(minibatch)
    states = np.stack([e.s for e in minibatch])
    actions = np.array([e.a for e in minibatch])
    rewards = np.array([e.r for e in minibatch])
    live = np.array([not e.terminal for e in minibatch])
    q_next = net.forward_batch(np.stack([e.s_next for e in minibatch]))
    targets = np.where(live, rewards + discount * q_next.max(axis=1), rewards)

    h1 = _sigmoid(states @ net.w1.T + net.b1)
    h2 = _sigmoid(h1 @ net.w2.T + net.b2)
    qvals = h2 @ net.w3.T + net.b3
    picked = qvals[np.arange(n), actions]
    err = targets - picked
    loss = float(np.mean(err ** 2))
    if not math.isfinite(loss):
        raise TrainingDiverged(f"training loss is not finite: {loss}")

    # d(loss)/d(q_a) = -2 * err / n, routed to the taken action only
    g3 = np.zeros_like(qvals)
    g3[np.arange(n), actions] = -2.0 * err / n
    dw3 = g3.T @ h2
    db3 = g3.sum(axis=0)
    d2 = (g3 @ net.w3) * h2 * (1.0 - h2)
    dw2 = d2.T @ h1
    db2 = d2.sum(axis=0)
    d1 = (d2 @ net.w2) * h1 * (1.0 - h1)
    dw1 = d1.T @ states
    db1 = d1.sum(axis=0)

    net.w3 -= eta * dw3
    net.b3 -= eta * db3
    net.w2 -= eta * dw2
    net.b2 -= eta * db2
    net.w1 -= eta * dw1
    net.b1 -= eta * db1
    return net, loss


class ReplayBuffer:
    """Ring buffer of experiences with uniform minibatch sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self._q = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._q)

    def push(self, e: Experience) -> None:
        self._q.append(e)

    def sample(self, n: int, rng: np.random.Generator) -> list[Experience]:
        """n distinct experiences, uniformly without replacement."""
        if n > len(self._q):
            raise ValueError(f"cannot sample {n} from buffer of {len(self._q)}")
        idx = rng.choice(len(self._q), size=n, replace=False)
        return [self._q[int(i)] for i in idx]

    def adjust_last_reward(self, delta: float) -> None:
        """Patch the most recent experience's reward (end-of-episode bonus)."""
        if self._q:
            e = self._q[-1]
            self._q[-1] = replace(e, r=e.r + delta)


# ---------------------------------------------------------------------------
# state normalisation


def normalize_state(raw: np.ndarray, layout: Layout, m: int,
                    p_max_dbm: float = 46.0) -> np.ndarray:
    """Map the raw observation into [-1, 1]-ish per dimension.

    raw = (x_l, y_l, x_b, y_b, P_l, P_b, n_l, n_b): UE coordinates are
    centred on the serving site and divided by the cell radius, powers map
    by (P - 46)/40, beam indices by 2*(n + 1/2)/M - 1.
    """
    r = layout.cell_radius_m
    s0, s1 = layout.sites[0], layout.sites[1]
    out = np.empty(8)
    out[0] = (raw[0] - s0.x) / r
    out[1] = (raw[1] - s0.y) / r
    out[2] = (raw[2] - s1.x) / r
    out[3] = (raw[3] - s1.y) / r
    out[4] = (raw[4] - p_max_dbm) / 40.0
    out[5] = (raw[5] - p_max_dbm) / 40.0
    out[6] = 2.0 * (raw[6] + 0.5) / m - 1.0
    out[7] = 2.0 * (raw[7] + 0.5) / m - 1.0
    return out


# ---------------------------------------------------------------------------
# tabular learner


def tabular_update(q_values: np.ndarray, s: int, a: int, r: float, s_next: int,
                   alpha: float, discount: float) -> np.ndarray:
    """Q(s,a) := (1-alpha) Q(s,a) + alpha (r + discount * max_a' Q(s',a'))."""
    q_values[s, a] = ((1.0 - alpha) * q_values[s, a]
                      + alpha * (r + discount * float(np.max(q_values[s_next]))))
    return q_values


class QTable:
    """Zero-initialised table over a uniform discretisation of [-1, 1]^d."""

    def __init__(self, n_dims: int = 8, bins: int = 4, n_actions: int = 16):
        self.n_dims = n_dims
        self.bins = bins
        self.n_actions = n_actions
        self.values = np.zeros((bins ** n_dims, n_actions))

    def state_index(self, s_norm: np.ndarray) -> int:
        idx = 0
        for i in range(self.n_dims):
            b = int((s_norm[i] + 1.0) / 2.0 * self.bins)
            b = min(max(b, 0), self.bins - 1)
            idx = idx * self.bins + b
        return idx


# ---------------------------------------------------------------------------
# checkpointing


def save_weights(net: QNetwork, path: str | Path, config_hash: str = "",
                 seed: int = 0, episode: int = 0) -> None:
    np.savez(path, w1=net.w1, b1=net.b1, w2=net.w2, b2=net.b2, w3=net.w3,
             b3=net.b3, meta=np.array([config_hash, str(seed), str(episode)]))


def load_weights(path: str | Path) -> tuple[QNetwork, dict]:
    data = np.load(path, allow_pickle=False)
    net = QNetwork(data["w1"], data["b1"], data["w2"], data["b2"],
                   data["w3"], data["b3"])
    meta = data["meta"]
    return net, {"config_hash": str(meta[0]), "seed": int(meta[1]),
                 "episode": int(meta[2])}
