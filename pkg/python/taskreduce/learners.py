"""
Replay buffers, critics and the trainable encoder -> policy -> decoder chains.

Discrete chains compose probabilities: the encoder yields features for the inner
policy (residual on boxes, a softmax relaxation of the one-hot on finite
spaces), the inner policy yields P2 = softmax(logits), and the decoder is a row
stochastic matrix D over (A2, A1), so p1 = P2 @ D. Greedy evaluation takes the
argmax at every stage.

Continuous chains use a tanh-squashed Gaussian actor and a residual decoder
clipped to the action box with a straight-through gradient.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from . import _validate
from .diffnet import Adam, MlpNet, backward, initialize
from .errors import ConfigurationError, TrainingError
from .reduction import ComposedPolicy, Transform
from .taskcore import BoxSpace, FiniteSpace, Policy, Space, TaskSpec

logger = logging.getLogger(__name__)

LOG_PROB_FLOOR = 1e-8
LOG_STD_BOUNDS = (-5.0, 1.0)


# W4-BEGIN:arch
@dataclass(frozen=True)
class ArchSpec:
    """Network shape: depth None means identity-only, 0 a single linear layer."""

    depth: int | None = 2
    width: int = 64
    activation: str = "tanh"

    def __post_init__(self):
        if self.depth is not None:
            _validate.nonneg_int("depth", self.depth)
        _validate.positive_int("width", self.width)
        if self.activation not in ("tanh", "relu"):
            raise ConfigurationError(f"activation must be 'tanh' or 'relu', got {self.activation!r}")

    @property
    def is_identity(self) -> bool:
        return self.depth is None

    @property
    def label(self) -> str:
        return "identity" if self.depth is None else str(self.depth)

    @property
    def full_label(self) -> str:
        return "identity" if self.depth is None else f"{self.depth}x{self.width}-{self.activation}"

    def dims(self, d_in: int, d_out: int) -> tuple[int, ...]:
        if self.depth is None:
            raise ConfigurationError("identity-only architecture has no layers")
        return (d_in, *([self.width] * self.depth), d_out)

    def build(self, d_in: int, d_out: int, rng: np.random.Generator, zero_output: bool = False) -> MlpNet:
        net = initialize(self.dims(d_in, d_out), self.activation, rng=rng)
        return net.zero_output_layer() if zero_output else net

    def to_dict(self) -> dict:
        return {"depth": self.depth, "width": self.width, "activation": self.activation}
# W4-END:arch


# W4-BEGIN:buffer
class TransitionBatch(NamedTuple):
    states: list
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray
    indices: np.ndarray


class ReplayBuffer:
    """Fixed-capacity ring of (s, o, a, r, o', done) with features stored as float arrays."""

    def __init__(self, capacity: int, obs_dim: int, action_shape: tuple[int, ...] = ()):
        self.capacity = _validate.positive_int("replay_capacity", capacity)
        discrete = action_shape == ()
        self.obs = np.zeros((self.capacity, obs_dim))
        self.next_obs = np.zeros((self.capacity, obs_dim))
        self.actions = np.zeros((self.capacity, *action_shape), dtype=np.int64 if discrete else np.float64)
        self.rewards = np.zeros(self.capacity)
        self.dones = np.zeros(self.capacity)
        self.states: list = [None] * self.capacity
        self.size = 0
        self._next = 0

    def __len__(self) -> int:
        return self.size

    def add(self, state, obs, action, reward: float, next_obs, done: bool) -> None:
        i = self._next
        self.states[i] = state
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, rng: np.random.Generator, batch_size: int) -> TransitionBatch:
        if self.size == 0:
            raise TrainingError("cannot sample from an empty replay buffer", {"capacity": self.capacity})
        idx = rng.integers(0, self.size, size=batch_size)
        return TransitionBatch([self.states[i] for i in idx], self.obs[idx], self.actions[idx],
                               self.rewards[idx], self.next_obs[idx], self.dones[idx], idx)


def featurize_batch(space: Space, xs: Sequence) -> np.ndarray:
    return np.stack([space.featurize(x) for x in xs])


class Collector:
    """Steps one task episode by episode, feeding a replay buffer."""

    def __init__(self, task: TaskSpec, buffer: ReplayBuffer, rng: np.random.Generator):
        self.task = task
        self.buffer = buffer
        self.rng = rng
        self.state = None
        self.obs = None
        self.t = 0
        self.episode_return = 0.0
        self.returns: list[float] = []

    def _reset(self) -> None:
        model = self.task.model
        s = model.initial(self.rng)
        self.state, self.obs, self.t, self.episode_return = s, model.observe(s, self.rng), 0, 0.0

    def step(self, choose: Callable[[Any], Any]) -> bool:
        """Take one step with `choose(observation)`; returns True when the episode ended."""
        if self.state is None or self.task.model.terminal(self.state):
            self._reset()
        model, s, o = self.task.model, self.state, self.obs
        a = choose(o)
        r = model.reward(s, a)
        s2 = model.transition(s, a, self.rng)
        o2 = model.observe(s2, self.rng)
        self.t += 1
        done = model.terminal(s2) or self.t >= self.task.horizon
        space = self.task.observations
        self.buffer.add(s, space.featurize(o), a, r, space.featurize(o2), done)
        self.episode_return += r
        if done:
            self.returns.append(self.episode_return)
            self.state = None
        else:
            self.state, self.obs = s2, o2
        return done
# W4-END:buffer


# W4-BEGIN:losses
def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(p: np.ndarray, dp: np.ndarray) -> np.ndarray:
    return p * (dp - (dp * p).sum(axis=-1, keepdims=True))


def q_loss_from_probs(actions: np.ndarray, probs: np.ndarray, q_values: np.ndarray) -> tuple[float, np.ndarray]:
    """-(1/B) sum_b Q_b log max(p_b(a_b), floor) and its gradient with respect to probs."""
    a = np.asarray(actions, dtype=np.int64)
    q = np.asarray(q_values, dtype=np.float64)
    B = a.shape[0]
    rows = np.arange(B)
    pa = probs[rows, a]
    live = pa > LOG_PROB_FLOOR
    loss = float(-np.mean(q * np.log(np.maximum(pa, LOG_PROB_FLOOR))))
    dprobs = np.zeros_like(probs)
    dprobs[rows, a] = np.where(live, -q / (B * np.maximum(pa, LOG_PROB_FLOOR)), 0.0)
    return loss, dprobs


def q_learning_loss(actions, logits, q_values) -> float:
    """Q-weighted negative log-likelihood of the batch actions under softmax(logits)."""
    return q_loss_from_probs(actions, softmax(np.asarray(logits, dtype=np.float64)), q_values)[0]


def q_learning_loss_grad(actions, logits, q_values) -> tuple[float, np.ndarray]:
    p = softmax(np.asarray(logits, dtype=np.float64))
    loss, dp = q_loss_from_probs(actions, p, q_values)
    return loss, softmax_backward(p, dp)
# W4-END:losses


# W4-BEGIN:critics
def _check_critic(loss: float, limit: float, name: str, steps: int) -> None:
    if not math.isfinite(loss) or loss > limit:
        raise TrainingError(f"critic {name} diverged", {"critic": name, "td_loss": loss, "limit": limit, "td_steps": steps})


class DiscreteCritic:
    """Q(o, .) for finite actions, regressed on one-step expected-SARSA targets."""

    def __init__(self, name: str, net: MlpNet, lr: float, gamma: float, target_every: int = 100, loss_limit: float = 1e6):
        self.name = name
        self.net = net
        self.target = net
        self.opt = Adam(lr)
        self.gamma = gamma
        self.target_every = target_every
        self.loss_limit = loss_limit
        self.steps = 0

    def q_all(self, X: np.ndarray) -> np.ndarray:
        return self.net.forward(X)

    def q(self, X: np.ndarray, actions: np.ndarray) -> np.ndarray:
        return self.q_all(X)[np.arange(len(actions)), actions]

    def td_update(self, batch: TransitionBatch, next_probs: np.ndarray) -> float:
        nxt = (next_probs * self.target.forward(batch.next_obs)).sum(axis=1)
        y = batch.rewards + self.gamma * (1.0 - batch.dones) * nxt
        Q, tape = self.net.record(batch.obs)
        rows = np.arange(len(y))
        err = Q[rows, batch.actions] - y
        loss = float(np.mean(err * err))
        _check_critic(loss, self.loss_limit, self.name, self.steps)
        up = np.zeros_like(Q)
        up[rows, batch.actions] = 2.0 * err / len(y)
        self.net = self.net.with_params(self.opt.step(self.net.params, backward(self.net, tape, up).params))
        self.steps += 1
        if self.steps % self.target_every == 0:
            self.target = self.net
        return loss


class ContinuousCritic:
    """Q(o, a) for box actions; input is the concatenation [o, a]."""

    def __init__(self, name: str, net: MlpNet, obs_dim: int, lr: float, gamma: float,
                 target_every: int = 100, loss_limit: float = 1e6):
        self.name = name
        self.net = net
        self.target = net
        self.obs_dim = obs_dim
        self.opt = Adam(lr)
        self.gamma = gamma
        self.target_every = target_every
        self.loss_limit = loss_limit
        self.steps = 0

    def q(self, X: np.ndarray, A: np.ndarray) -> np.ndarray:
        return self.net.forward(np.hstack([X, A]))[:, 0]

    def q_and_action_grad(self, X: np.ndarray, A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Q values and d(mean Q)/dA."""
        out, tape = self.net.record(np.hstack([X, A]))
        g = backward(self.net, tape, np.full_like(out, 1.0 / len(out)))
        return out[:, 0], g.inputs[:, self.obs_dim:]

    def td_update(self, batch: TransitionBatch, next_actions: np.ndarray) -> float:
        nxt = self.target.forward(np.hstack([batch.next_obs, next_actions]))[:, 0]
        y = batch.rewards + self.gamma * (1.0 - batch.dones) * nxt
        out, tape = self.net.record(np.hstack([batch.obs, batch.actions]))
        err = out[:, 0] - y
        loss = float(np.mean(err * err))
        _check_critic(loss, self.loss_limit, self.name, self.steps)
        up = (2.0 * err / len(y))[:, None]
        self.net = self.net.with_params(self.opt.step(self.net.params, backward(self.net, tape, up).params))
        self.steps += 1
        if self.steps % self.target_every == 0:
            self.target = self.net
        logger.debug("critic %s td loss %.6g", self.name, loss)
        return loss
# W4-END:critics


# W4-BEGIN:transforms
def _identity_transform(kind: type[Transform], dom: Space, cod: Space) -> Transform:
    if not dom.compatible(cod):
        raise ConfigurationError("identity-only transform needs matching domain and codomain")
    if isinstance(dom, FiniteSpace):
        return kind.tabular(range(dom.size), dom, cod)
    return kind.closed_form("identity", dom, cod)


@dataclass
class TrainableTransform:
    """Encoder or decoder parameters plus the fixed wiring around them."""

    kind: type[Transform]
    domain: Space
    codomain: Space
    net: MlpNet | None
    residual: bool

    @classmethod
    def build(cls, kind, arch: ArchSpec, domain: Space, codomain: Space, rng: np.random.Generator):
        if arch.is_identity:
            _identity_transform(kind, domain, codomain)
            return cls(kind, domain, codomain, None, False)
        residual = domain.feature_dim == codomain.feature_dim and type(domain) is type(codomain)
        net = arch.build(domain.feature_dim, codomain.feature_dim, rng, zero_output=residual)
        return cls(kind, domain, codomain, net, residual)

    @property
    def trainable(self) -> bool:
        return self.net is not None

    def frozen(self) -> Transform:
        if self.net is None:
            return _identity_transform(self.kind, self.domain, self.codomain)
        return self.kind.neural(self.net, self.domain, self.codomain, residual=self.residual)

    def step(self, opt: Adam, grad: np.ndarray) -> None:
        self.net = self.net.with_params(opt.step(self.net.params, grad))


def _finite_residual(feats: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(feats, LOG_PROB_FLOOR))
# W4-END:transforms


# W4-BEGIN:discrete-chain
class DiscreteAgent:
    """pi2 on task 2 plus the encoder/decoder wrapping it for task 1 (finite actions)."""

    def __init__(self, pi: MlpNet, obs2: Space, act2: FiniteSpace,
                 encoder: TrainableTransform | None = None, decoder: TrainableTransform | None = None):
        self.pi = pi
        self.obs2, self.act2 = obs2, act2
        self.encoder, self.decoder = encoder, decoder

    # task 2
    def probs2(self, X2: np.ndarray) -> np.ndarray:
        return softmax(self.pi.forward(X2))

    def loss2(self, X2, actions, q) -> tuple[float, np.ndarray]:
        Z, tape = self.pi.record(X2)
        loss, dZ = q_learning_loss_grad(actions, Z, q)
        return loss, backward(self.pi, tape, dZ).params

    # task 1
    def _encode(self, X1: np.ndarray):
        enc = self.encoder
        if enc is None or enc.net is None:
            return X1, None
        out, tape = enc.net.record(X1)
        if isinstance(enc.codomain, FiniteSpace):
            y = softmax(out + _finite_residual(X1)) if enc.residual else softmax(out)
        else:
            y = out + X1 if enc.residual else out
        return y, tape

    def _decoder_matrix(self):
        dec = self.decoder
        if dec is None or dec.net is None:
            return np.eye(self.act2.size), None
        eye = np.eye(self.act2.size)
        L, tape = dec.net.record(eye)
        if dec.residual:
            L = L + _finite_residual(eye)
        return softmax(L), tape

    def probs1(self, X1: np.ndarray) -> np.ndarray:
        y, _ = self._encode(X1)
        D, _ = self._decoder_matrix()
        return softmax(self.pi.forward(y)) @ D

    def loss1(self, X1, actions, q) -> tuple[float, dict[str, np.ndarray]]:
        """Loss on task 1 through the full chain, with gradients for pi, h and g."""
        y, h_tape = self._encode(X1)
        Z2, pi_tape = self.pi.record(y)
        P2 = softmax(Z2)
        D, g_tape = self._decoder_matrix()
        loss, dp1 = q_loss_from_probs(actions, P2 @ D, q)
        dZ2 = softmax_backward(P2, dp1 @ D.T)
        gpi = backward(self.pi, pi_tape, dZ2)
        grads = {"pi": gpi.params}
        if g_tape is not None:
            grads["g"] = backward(self.decoder.net, g_tape, softmax_backward(D, P2.T @ dp1)).params
        if h_tape is not None:
            up = softmax_backward(y, gpi.inputs) if isinstance(self.encoder.codomain, FiniteSpace) else gpi.inputs
            grads["h"] = backward(self.encoder.net, h_tape, up).params
        return loss, grads

    # evaluation objects
    def policy2(self) -> Policy:
        return Policy.neural(self.pi, self.obs2, self.act2)

    def composed(self) -> ComposedPolicy:
        return ComposedPolicy(self.encoder.frozen(), self.policy2(), self.decoder.frozen())
# W4-END:discrete-chain


# W4-BEGIN:continuous-chain
class ContinuousAgent:
    """Tanh-squashed Gaussian actor pi2 with learnt log-std, plus encoder/decoder for task 1."""

    def __init__(self, pi: MlpNet, log_std: np.ndarray, obs2: Space, act2: BoxSpace,
                 encoder: TrainableTransform | None = None, decoder: TrainableTransform | None = None):
        self.pi = pi
        self.log_std = np.asarray(log_std, dtype=np.float64)
        self.obs2, self.act2 = obs2, act2
        self.encoder, self.decoder = encoder, decoder
        lo, hi = np.asarray(act2.lower), np.asarray(act2.upper)
        self.center, self.half = (lo + hi) / 2.0, (hi - lo) / 2.0

    def _squash(self, u: np.ndarray) -> np.ndarray:
        return self.center + self.half * np.tanh(u)

    def sample2(self, X2: np.ndarray, rng: np.random.Generator, noise: bool = True) -> np.ndarray:
        u = self.pi.forward(X2)
        if noise:
            u = u + np.exp(self.log_std) * rng.standard_normal(u.shape)
        return self._squash(u)

    def _encode(self, X1):
        enc = self.encoder
        if enc is None or enc.net is None:
            return X1, None
        out, tape = enc.net.record(X1)
        return (out + X1 if enc.residual else out), tape

    def _decode(self, A2):
        dec = self.decoder
        if dec is None or dec.net is None:
            return A2, None
        out, tape = dec.net.record(A2)
        z = out + A2 if dec.residual else out
        box = dec.codomain
        return np.clip(z, box.lower, box.upper), tape

    def sample1(self, X1: np.ndarray, rng: np.random.Generator, noise: bool = True) -> np.ndarray:
        y, _ = self._encode(X1)
        return self._decode(self.sample2(y, rng, noise))[0]

    def _actor_forward(self, X: np.ndarray, eps: np.ndarray):
        u, tape = self.pi.record(X)
        sigma = np.exp(self.log_std)
        t = np.tanh(u + sigma * eps)
        return self.center + self.half * t, (tape, t, sigma)

    def _actor_backward(self, cache, eps, dA) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        tape, t, sigma = cache
        du = dA * self.half * (1.0 - t * t)
        g = backward(self.pi, tape, du)
        dlog = (du * sigma * eps).sum(axis=0)
        return g.params, dlog, g.inputs

    def grad2(self, X2, eps, critic: ContinuousCritic) -> tuple[float, np.ndarray, np.ndarray]:
        """mean Q2(o, pi2(o)) and its gradients for pi params and log-std."""
        A, cache = self._actor_forward(X2, eps)
        q, dA = critic.q_and_action_grad(X2, A)
        gp, gl, _ = self._actor_backward(cache, eps, dA)
        return float(q.mean()), gp, gl

    def grad1(self, X1, eps, critic: ContinuousCritic) -> tuple[float, dict[str, np.ndarray]]:
        """mean Q1(o, g(pi2(h(o)))) and gradients for pi, log-std, h and g."""
        y, h_tape = self._encode(X1)
        A2, cache = self._actor_forward(y, eps)
        A1, g_tape = self._decode(A2)
        q, dA1 = critic.q_and_action_grad(X1, A1)
        grads: dict[str, np.ndarray] = {}
        dA2 = dA1
        if g_tape is not None:
            # straight-through clip
            gg = backward(self.decoder.net, g_tape, dA1)
            grads["g"] = gg.params
            dA2 = dA1 + gg.inputs if self.decoder.residual else gg.inputs
        gp, gl, dy = self._actor_backward(cache, eps, dA2)
        grads["pi"], grads["log_std"] = gp, gl
        if h_tape is not None:
            grads["h"] = backward(self.encoder.net, h_tape, dy).params
        return float(q.mean()), grads

    def policy2(self) -> Policy:
        return Policy.neural(self.pi, self.obs2, self.act2)

    def composed(self) -> ComposedPolicy:
        return ComposedPolicy(self.encoder.frozen(), self.policy2(), self.decoder.frozen())
# W4-END:continuous-chain


# W4-BEGIN:schedule
def epsilon_at(iteration: int, max_iters: int, start: float = 1.0, end: float = 0.05, fraction: float = 1.0 / 3.0) -> float:
    horizon = max(1.0, fraction * max_iters)
    return start + (end - start) * min(1.0, iteration / horizon)


class ConvergenceMonitor:
    """Moving averages of evaluation returns; converged once both moved < tol over the last window."""

    def __init__(self, window: int = 50, tol: float = 0.01, series: int = 2):
        self.window = _validate.positive_int("convergence_window", window)
        self.tol = tol
        self.history: list[tuple[float, ...]] = []
        self.series = series

    def add(self, *values: float) -> None:
        self.history.append(tuple(float(v) for v in values))

    @property
    def converged(self) -> bool:
        w = self.window
        if len(self.history) < 2 * w:
            return False
        h = np.asarray(self.history)
        prev = h[-2 * w:-w].mean(axis=0)
        last = h[-w:].mean(axis=0)
        scale = np.maximum(np.abs(prev), 1e-12)
        return bool(np.all(np.abs(last - prev) <= self.tol * scale))
# W4-END:schedule


__all__ = [
    "ArchSpec", "TransitionBatch", "ReplayBuffer", "Collector", "DiscreteCritic", "ContinuousCritic",
    "TrainableTransform", "DiscreteAgent", "ContinuousAgent", "ConvergenceMonitor",
    "softmax", "softmax_backward", "q_learning_loss", "q_learning_loss_grad", "q_loss_from_probs",
    "epsilon_at", "featurize_batch", "LOG_PROB_FLOOR", "LOG_STD_BOUNDS",
]
