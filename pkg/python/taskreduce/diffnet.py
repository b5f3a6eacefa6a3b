# W2-BEGIN:diffnet
"""
Small multilayer perceptrons with hand-written reverse-mode gradients.

Layout of the flat parameter vector: for each layer i, W_i with shape
(dims[i+1], dims[i]) in row-major order, followed by b_i. Hidden layers use the
net's activation; the output layer is linear.

Public API:
- MlpNet(layer_dims, activation='tanh', params=None)
- initialize(layer_dims, activation='tanh', seed=None, rng=None) -> MlpNet
- forward(net, x) -> np.ndarray
- net.record(x) -> (y, GradTape); backward(net, tape, upstream) -> Gradients
- Sgd, Adam optimizers; sgd_step / adam_step
- numeric_gradient / max_relative_error for finite-difference checks
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, NamedTuple, Sequence

import numpy as np

from . import _validate
from .errors import ConfigurationError, TrainingError, UsageError

Activation = Literal["tanh", "relu"]
_ACTIVATIONS = ("tanh", "relu")


def _param_count(dims: Sequence[int]) -> int:
    return sum((dims[i] + 1) * dims[i + 1] for i in range(len(dims) - 1))


@dataclass(frozen=True, eq=False)
class MlpNet:
    layer_dims: tuple[int, ...]
    activation: Activation = "tanh"
    params: np.ndarray | None = None

    def __post_init__(self):
        dims = tuple(_validate.positive_int("layer_dims entry", d) for d in self.layer_dims)
        if len(dims) < 2:
            raise ConfigurationError("layer_dims needs at least input and output sizes")
        if self.activation not in _ACTIVATIONS:
            raise ConfigurationError(f"activation must be one of {_ACTIVATIONS}, got {self.activation!r}")
        n = _param_count(dims)
        if self.params is None:
            p = np.zeros(n)
        else:
            p = np.array(self.params, dtype=np.float64).reshape(-1)
            if p.size != n:
                raise ConfigurationError(f"params must have length {n} for dims {dims}, got {p.size}")
        p.setflags(write=False)
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "params", p)

    @property
    def param_count(self) -> int:
        return self.params.size

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def output_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def depth(self) -> int:
        """Number of hidden layers."""
        return len(self.layer_dims) - 2

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        out, off = [], 0
        for d_in, d_out in zip(self.layer_dims[:-1], self.layer_dims[1:]):
            W = self.params[off:off + d_in * d_out].reshape(d_out, d_in)
            off += d_in * d_out
            b = self.params[off:off + d_out]
            off += d_out
            out.append((W, b))
        return out

    def with_params(self, params) -> "MlpNet":
        return MlpNet(self.layer_dims, self.activation, params)

    def zero_output_layer(self) -> "MlpNet":
        d_in, d_out = self.layer_dims[-2], self.layer_dims[-1]
        p = self.params.copy()
        p[p.size - (d_in + 1) * d_out:] = 0.0
        return self.with_params(p)

    def _check_input(self, x) -> tuple[np.ndarray, bool]:
        a = np.asarray(x, dtype=np.float64)
        single = a.ndim == 1
        a2 = a.reshape(1, -1) if single else a
        if a2.ndim != 2 or a2.shape[1] != self.input_dim:
            raise ConfigurationError(f"input must have trailing dimension {self.input_dim}, got shape {a.shape}")
        return a2, single

    def forward(self, x) -> np.ndarray:
        a, single = self._check_input(x)
        layers = self.layers()
        for i, (W, b) in enumerate(layers):
            a = a @ W.T + b
            if i < len(layers) - 1:
                a = _activate(self.activation, a)
        return a[0] if single else a

    def record(self, x) -> tuple[np.ndarray, "GradTape"]:
        """Forward pass that keeps the activations needed by `backward`."""
        a, single = self._check_input(x)
        layers = self.layers()
        acts = [a]
        for i, (W, b) in enumerate(layers):
            a = a @ W.T + b
            if i < len(layers) - 1:
                a = _activate(self.activation, a)
            acts.append(a)
        tape = GradTape(params=self.params, activations=tuple(acts), single=single)
        return (a[0] if single else a), tape

    def to_dict(self) -> dict:
        return {"layer_dims": list(self.layer_dims), "activation": self.activation,
                "params": [float(v) for v in self.params]}

    @classmethod
    def from_dict(cls, data: dict) -> "MlpNet":
        return cls(tuple(data["layer_dims"]), data.get("activation", "tanh"), np.asarray(data["params"], dtype=np.float64))

    def save(self, path: str | Path) -> Path:
        p = Path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(self.to_dict()), encoding="utf-8")
        return p

    @classmethod
    def load(cls, path: str | Path) -> "MlpNet":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    return np.tanh(z) if kind == "tanh" else np.maximum(z, 0.0)


def _activation_grad(kind: str, a: np.ndarray) -> np.ndarray:
    # expressed through the activation output a
    return 1.0 - a * a if kind == "tanh" else (a > 0.0).astype(np.float64)


def initialize(
    layer_dims: Sequence[int],
    activation: Activation = "tanh",
    seed: int | None = None,
    rng: np.random.Generator | None = None,
) -> MlpNet:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases."""
    if rng is None:
        rng = np.random.default_rng(seed)
    dims = tuple(int(d) for d in layer_dims)
    chunks = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / math.sqrt(d_in)
        chunks.append(rng.uniform(-bound, bound, size=d_in * d_out))
        chunks.append(rng.uniform(-bound, bound, size=d_out))
    return MlpNet(dims, activation, np.concatenate(chunks))


def forward(net: MlpNet, x) -> np.ndarray:
    return net.forward(x)


class GradTape(NamedTuple):
    params: np.ndarray
    activations: tuple[np.ndarray, ...]
    single: bool


class Gradients(NamedTuple):
    params: np.ndarray
    inputs: np.ndarray


def backward(net: MlpNet, tape: GradTape | None, upstream) -> Gradients:
    """Pull `upstream` = dL/d(output) back to dL/d(params) and dL/d(input).

    Batched tapes sum parameter gradients over the batch.
    """
    if tape is None:
        raise UsageError("backward needs a tape from MlpNet.record")
    if tape.params is not net.params and not np.array_equal(tape.params, net.params):
        raise UsageError("tape was recorded with different parameters")
    g = np.asarray(upstream, dtype=np.float64)
    g = g.reshape(1, -1) if tape.single else g
    acts = tape.activations
    if g.shape != acts[-1].shape:
        raise ConfigurationError(f"upstream gradient shape {g.shape} does not match output {acts[-1].shape}")
    layers = net.layers()
    grads: list[np.ndarray] = [np.empty(0)] * (2 * len(layers))
    for i in range(len(layers) - 1, -1, -1):
        W, _ = layers[i]
        grads[2 * i] = (g.T @ acts[i]).reshape(-1)
        grads[2 * i + 1] = g.sum(axis=0)
        g = g @ W
        if i > 0:
            g = g * _activation_grad(net.activation, acts[i])
    inputs = g[0] if tape.single else g
    return Gradients(np.concatenate(grads), inputs)


# W2-BEGIN:optim
def _check_step(params: np.ndarray, grad) -> np.ndarray:
    g = np.asarray(grad, dtype=np.float64)
    if g.shape != params.shape:
        raise ConfigurationError(f"gradient shape {g.shape} does not match params {params.shape}")
    if not np.all(np.isfinite(g)):
        bad = int(np.flatnonzero(~np.isfinite(g))[0])
        raise TrainingError("non-finite gradient", {"first_bad_index": bad, "size": int(g.size)})
    return g


@dataclass
class Sgd:
    lr: float

    def __post_init__(self):
        self.lr = _validate.positive_real("lr", self.lr)

    def step(self, params: np.ndarray, grad) -> np.ndarray:
        p = np.asarray(params, dtype=np.float64)
        return p - self.lr * _check_step(p, grad)


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: np.ndarray | None = field(default=None, repr=False)
    v: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.lr = _validate.positive_real("lr", self.lr)
        for name in ("beta1", "beta2"):
            b = _validate.finite_real(name, getattr(self, name))
            if not 0.0 <= b < 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1)")

    def step(self, params: np.ndarray, grad) -> np.ndarray:
        p = np.asarray(params, dtype=np.float64)
        g = _check_step(p, grad)
        if self.m is None:
            self.m = np.zeros_like(p)
            self.v = np.zeros_like(p)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * g
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * g * g
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return p - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def sgd_step(params, grad, lr: float) -> np.ndarray:
    return Sgd(lr).step(params, grad)


def adam_step(params, grad, optimizer: Adam) -> np.ndarray:
    return optimizer.step(params, grad)
# W2-END:optim


# W2-BEGIN:gradcheck
def numeric_gradient(loss: Callable[[np.ndarray], float], params: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar loss over a flat parameter vector."""
    p = np.array(params, dtype=np.float64)
    out = np.empty_like(p)
    for i in range(p.size):
        orig = p[i]
        p[i] = orig + step
        hi = loss(p)
        p[i] = orig - step
        lo = loss(p)
        p[i] = orig
        out[i] = (hi - lo) / (2.0 * step)
    return out


def max_relative_error(analytic, numeric, floor: float = 1e-3) -> float:
    """max |a - n| / max(|a|, |n|, floor).

    Entries whose magnitude is below `floor` are compared by absolute error.
    """
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def gradient_check(net: MlpNet, x, rng: np.random.Generator, step: float = 1e-5) -> float:
    """Max relative error of `backward` against finite differences for a random linear loss."""
    y, tape = net.record(x)
    w = rng.standard_normal(np.shape(y))
    analytic = backward(net, tape, w).params
    numeric = numeric_gradient(lambda p: float(np.sum(net.with_params(p).forward(x) * w)), net.params, step)
    return max_relative_error(analytic, numeric)
# W2-END:gradcheck


__all__ = [
    "MlpNet", "GradTape", "Gradients", "Sgd", "Adam", "initialize", "forward", "backward",
    "sgd_step", "adam_step", "numeric_gradient", "max_relative_error", "gradient_check",
]
# W2-END:diffnet
