"""
Tasks, policies, rollouts and returns.

A task is the POMDP tuple (S, A, O, p, sigma, r, p0, R*) plus a finite horizon T and a
terminal predicate. Finite tasks carry dense kernels (`TabularModel`) and support
exact evaluation by backward dynamic programming; continuous tasks only support
sampling.

Return semantics: per-rollout reward sums are averaged unclipped and the mean is
clipped at R*, i.e. R(pi) = min(E[sum r], R*).
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Hashable, Iterable, Mapping, NamedTuple, Sequence, Union

import numpy as np

from . import _validate
from .diffnet import MlpNet
from .errors import (
    ConfigurationError,
    EnumerationCapError,
    UnsupportedOperationError,
)
from .types import ActionDecode, SupportsAct, TaskModel

EXACT_TOL = 1e-10
DEFAULT_TOLERANCE = 0.05
ENUMERATION_CAP = 10**6


# W1-BEGIN:spaces
@dataclass(frozen=True)
class FiniteSpace:
    size: int
    labels: tuple[Hashable, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "size", _validate.positive_int("size", self.size))
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != self.size:
                raise ConfigurationError(f"labels must have length {self.size}, got {len(labels)}")
            if len(set(labels)) != len(labels):
                raise ConfigurationError("labels must be unique")
            object.__setattr__(self, "labels", labels)

    kind = "finite"

    @cached_property
    def _index(self) -> dict:
        return {lab: i for i, lab in enumerate(self.labels)} if self.labels is not None else {}

    def label(self, i: int) -> Hashable:
        return self.labels[i] if self.labels is not None else int(i)

    def index_of(self, label: Hashable) -> int:
        """Index of `label`; raises KeyError when the label is not in the space."""
        if self.labels is None:
            i = int(label)
            if not 0 <= i < self.size:
                raise KeyError(label)
            return i
        return self._index[label]

    @property
    def feature_dim(self) -> int:
        return self.size

    def featurize(self, x) -> np.ndarray:
        out = np.zeros(self.size)
        out[int(x)] = 1.0
        return out

    def compatible(self, other) -> bool:
        if not isinstance(other, FiniteSpace) or other.size != self.size:
            return False
        return self.labels is None or other.labels is None or self.labels == other.labels


@dataclass(frozen=True)
class BoxSpace:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) < 1 or len(lo) != len(hi):
            raise ConfigurationError("box lower/upper must be non-empty and of equal length")
        if any(a > b for a, b in zip(lo, hi)):
            raise ConfigurationError("box lower must be <= upper elementwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    kind = "box"

    @classmethod
    def symmetric(cls, bounds: Sequence[float]) -> "BoxSpace":
        return cls(tuple(-abs(b) for b in bounds), tuple(abs(b) for b in bounds))

    @property
    def dims(self) -> int:
        return len(self.lower)

    @property
    def feature_dim(self) -> int:
        return self.dims

    def featurize(self, x) -> np.ndarray:
        return np.asarray(x, dtype=np.float64).reshape(self.dims)

    def compatible(self, other) -> bool:
        return isinstance(other, BoxSpace) and other.dims == self.dims


Space = Union[FiniteSpace, BoxSpace]
StateSpace = ActionSpace = ObservationSpace = Space
# W1-END:spaces


# W1-BEGIN:model
@dataclass(frozen=True, eq=False)
class TabularModel:
    """Dense kernels: transition_table[s, a, s'], sensor[s, o], reward[s, a], init[s], terminal_mask[s]."""

    transition_table: np.ndarray
    sensor: np.ndarray
    reward_table: np.ndarray
    init: np.ndarray
    terminal_mask: np.ndarray

    def __post_init__(self):
        P = _validate.probability_rows("transition", self.transition_table)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise ConfigurationError(f"transition must have shape (S, A, S), got {P.shape}")
        S, A, _ = P.shape
        sig = _validate.probability_rows("sensor", self.sensor)
        if sig.ndim != 2 or sig.shape[0] != S:
            raise ConfigurationError(f"sensor must have shape ({S}, O), got {sig.shape}")
        r = np.array(self.reward_table, dtype=np.float64)
        if r.shape != (S, A):
            raise ConfigurationError(f"reward must have shape ({S}, {A}), got {r.shape}")
        if not np.all(np.isfinite(r)) or np.any(r < 0.0):
            raise ConfigurationError("reward must be finite and >= 0 for every (s, a)")
        p0 = _validate.probability_rows("init", self.init, shape_tail=S)
        if p0.ndim != 1:
            raise ConfigurationError("init must be a 1-D distribution over states")
        term = np.zeros(S, dtype=bool) if self.terminal_mask is None else np.array(self.terminal_mask, dtype=bool)
        if term.shape != (S,):
            raise ConfigurationError(f"terminal mask must have shape ({S},)")
        arrays = (("transition_table", P), ("sensor", sig), ("reward_table", r), ("init", p0), ("terminal_mask", term))
        for name, arr in arrays:
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_states(self) -> int:
        return self.transition_table.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition_table.shape[1]

    @property
    def n_observations(self) -> int:
        return self.sensor.shape[1]

    def initial(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.n_states, p=self.init))

    def observe(self, state: int, rng: np.random.Generator) -> int:
        return int(rng.choice(self.n_observations, p=self.sensor[state]))

    def transition(self, state: int, action: int, rng: np.random.Generator) -> int:
        return int(rng.choice(self.n_states, p=self.transition_table[state, action]))

    def reward(self, state: int, action: int) -> float:
        return float(self.reward_table[state, action])

    def terminal(self, state: int) -> bool:
        return bool(self.terminal_mask[state])

    def digest_bytes(self) -> bytes:
        h = hashlib.sha256()
        for arr in (self.transition_table, self.sensor, self.reward_table, self.init, self.terminal_mask):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.digest()
# W1-END:model


# W1-BEGIN:taskspec
@dataclass(frozen=True, eq=False)
class TaskSpec:
    name: str
    states: Space
    actions: Space
    observations: Space
    model: TaskModel
    success_threshold: float
    horizon: int
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "horizon", _validate.positive_int("horizon", self.horizon))
        object.__setattr__(self, "success_threshold", _validate.positive_real("success_threshold", self.success_threshold))
        if isinstance(self.model, TabularModel):
            m = self.model
            expected = (m.n_states, m.n_actions, m.n_observations)
            got = tuple(getattr(sp, "size", None) for sp in (self.states, self.actions, self.observations))
            if got != expected:
                raise ConfigurationError(f"space sizes {got} do not match kernel shapes {expected}")

    @classmethod
    def tabular(
        cls,
        name: str,
        *,
        transition,
        sensor,
        reward,
        init,
        success_threshold: float,
        horizon: int,
        terminal=None,
        state_labels: Sequence[Hashable] | None = None,
        observation_labels: Sequence[Hashable] | None = None,
        action_labels: Sequence[Hashable] | None = None,
        params: Mapping[str, Any] | None = None,
        model_cls: type = None,
        **model_extra,
    ) -> "TaskSpec":
        model_cls = model_cls or TabularModel
        model = model_cls(
            transition_table=transition, sensor=sensor, reward_table=reward, init=init,
            terminal_mask=terminal, **model_extra,
        )
        return cls(
            name=name,
            states=FiniteSpace(model.n_states, tuple(state_labels) if state_labels is not None else None),
            actions=FiniteSpace(model.n_actions, tuple(action_labels) if action_labels is not None else None),
            observations=FiniteSpace(model.n_observations, tuple(observation_labels) if observation_labels is not None else None),
            model=model,
            success_threshold=success_threshold,
            horizon=horizon,
            params=dict(params or {}),
        )

    @property
    def is_finite(self) -> bool:
        return isinstance(self.model, TabularModel)

    @cached_property
    def digest(self) -> str:
        """Canonical hash of the task's parameters, embedded in every result record."""
        h = hashlib.sha256()
        h.update(canonical_json({
            "name": self.name,
            "params": self.params,
            "success_threshold": self.success_threshold,
            "horizon": self.horizon,
        }).encode())
        if isinstance(self.model, TabularModel):
            h.update(self.model.digest_bytes())
        return h.hexdigest()[:16]

    def with_threshold(self, success_threshold: float, **params) -> "TaskSpec":
        merged = dict(self.params)
        merged.update(params)
        return replace(self, success_threshold=success_threshold, params=merged)
# W1-END:taskspec


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (tuple, set, frozenset)):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


# W1-BEGIN:policy
@dataclass(frozen=True, eq=False)
class Policy:
    """Deterministic memoryless policy, either a lookup table or an MLP with an action head."""

    observations: Space
    actions: Space
    table: tuple[int, ...] | None = None
    net: MlpNet | None = None
    action_decode: ActionDecode | None = None

    def __post_init__(self):
        if (self.table is None) == (self.net is None):
            raise ConfigurationError("policy needs exactly one of table or net")
        if self.table is not None:
            if not isinstance(self.observations, FiniteSpace) or not isinstance(self.actions, FiniteSpace):
                raise ConfigurationError("tabular policies need finite observation and action spaces")
            table = tuple(int(a) for a in self.table)
            if len(table) != self.observations.size:
                raise ConfigurationError(f"policy table must have {self.observations.size} entries, got {len(table)}")
            if any(not 0 <= a < self.actions.size for a in table):
                raise ConfigurationError("policy table entries must be valid action indices")
            object.__setattr__(self, "table", table)
        else:
            decode = self.action_decode or ("argmax" if isinstance(self.actions, FiniteSpace) else "tanh")
            if decode == "argmax" and not isinstance(self.actions, FiniteSpace):
                raise ConfigurationError("argmax decoding needs a finite action space")
            if decode == "tanh" and not isinstance(self.actions, BoxSpace):
                raise ConfigurationError("tanh decoding needs a box action space")
            out_dim = self.actions.size if decode == "argmax" else self.actions.dims
            if self.net.layer_dims[0] != self.observations.feature_dim or self.net.layer_dims[-1] != out_dim:
                raise ConfigurationError(
                    f"net dims {self.net.layer_dims} do not fit observation dim "
                    f"{self.observations.feature_dim} -> output dim {out_dim}")
            object.__setattr__(self, "action_decode", decode)

    @classmethod
    def tabular(cls, table: Iterable[int], observations: FiniteSpace, actions: FiniteSpace) -> "Policy":
        return cls(observations, actions, table=tuple(table))

    @classmethod
    def neural(cls, net: MlpNet, observations: Space, actions: Space) -> "Policy":
        return cls(observations, actions, net=net)

    @property
    def kind(self) -> str:
        return "tabular" if self.table is not None else "neural"

    def act(self, observation):
        if self.table is not None:
            return self.table[int(observation)]
        out = self.net.forward(self.observations.featurize(observation))
        if self.action_decode == "argmax":
            # np.argmax returns the first maximum: lowest action index wins ties
            return int(np.argmax(out))
        return squash_to_box(out, self.actions)

    def as_table(self) -> np.ndarray:
        return np.asarray(policy_table(self), dtype=np.int64)


def squash_to_box(u: np.ndarray, box: BoxSpace) -> np.ndarray:
    lo = np.asarray(box.lower)
    hi = np.asarray(box.upper)
    return lo + (np.tanh(u) + 1.0) * 0.5 * (hi - lo)


def constant_policy(task: "TaskSpec", action: int) -> Policy:
    """Policy emitting one discrete action everywhere (zero weights, one-hot bias)."""
    if not isinstance(task.actions, FiniteSpace):
        raise ConfigurationError("constant_policy needs a finite action space")
    if isinstance(task.observations, FiniteSpace):
        return Policy.tabular([action] * task.observations.size, task.observations, task.actions)
    net = MlpNet((task.observations.feature_dim, task.actions.size))
    params = np.zeros(net.param_count)
    params[-task.actions.size + int(action)] = 1.0
    return Policy.neural(net.with_params(params), task.observations, task.actions)


def policy_table(policy: SupportsAct, task: "TaskSpec | None" = None) -> tuple[int, ...]:
    """Materialize any policy on a finite observation space as an action-index table."""
    obs = task.observations if task is not None else policy.observations
    if not isinstance(obs, FiniteSpace):
        raise UnsupportedOperationError("policy tables need a finite observation space")
    table = getattr(policy, "table", None)
    if table is not None:
        return tuple(table)
    return tuple(int(policy.act(o)) for o in range(obs.size))


def policy_to_dict(policy: Policy) -> dict:
    if policy.table is not None:
        return {"kind": "tabular", "table": list(policy.table),
                "observations": policy.observations.size, "actions": policy.actions.size}
    return {"kind": "neural", "net": policy.net.to_dict(), "action_decode": policy.action_decode}


def policy_from_dict(data: Mapping[str, Any], observations: Space, actions: Space) -> Policy:
    if data["kind"] == "tabular":
        return Policy.tabular(data["table"], observations, actions)
    return Policy(observations, actions, net=MlpNet.from_dict(data["net"]), action_decode=data["action_decode"])
# W1-END:policy


def check_spaces(task: TaskSpec, policy: SupportsAct) -> None:
    if not task.observations.compatible(policy.observations):
        raise ConfigurationError(f"policy observation space does not match task {task.name!r}")
    if not task.actions.compatible(policy.actions):
        raise ConfigurationError(f"policy action space does not match task {task.name!r}")


# W1-BEGIN:rollout
class Step(NamedTuple):
    state: Any
    observation: Any
    action: Any
    reward: float


class ReturnEstimate(NamedTuple):
    value: float
    rollouts: int
    stderr: float
    clipped_fraction: float


def _rollout(task: TaskSpec, policy: SupportsAct, rng: np.random.Generator) -> list[Step]:
    model = task.model
    steps: list[Step] = []
    s = model.initial(rng)
    for _ in range(task.horizon):
        if model.terminal(s):
            break
        o = model.observe(s, rng)
        a = policy.act(o)
        r = model.reward(s, a)
        steps.append(Step(s, o, a, r))
        s = model.transition(s, a, rng)
    return steps


def rollout(task: TaskSpec, policy: SupportsAct, rng_seed: int) -> list[Step]:
    """One trajectory of (s, o, a, r) tuples, at most T long, stopping at terminal states."""
    check_spaces(task, policy)
    return _rollout(task, policy, np.random.default_rng(rng_seed))


def rollout_seeds(rng_seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(int(rng_seed)).spawn(int(n))


def estimate_return(task: TaskSpec, policy: SupportsAct, n_rollouts: int, rng_seed: int) -> ReturnEstimate:
    """Monte-Carlo R(pi): mean of unclipped per-rollout sums, then clipped at R*."""
    n = _validate.positive_int("n_rollouts", n_rollouts)
    check_spaces(task, policy)
    sums = np.array([
        sum(step.reward for step in _rollout(task, policy, np.random.default_rng(seq)))
        for seq in rollout_seeds(rng_seed, n)
    ], dtype=np.float64)
    r_star = task.success_threshold
    mean = float(sums.mean())
    stderr = float(sums.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return ReturnEstimate(
        value=min(mean, r_star),
        rollouts=n,
        stderr=stderr,
        clipped_fraction=float(np.mean(sums > r_star)),
    )
# W1-END:rollout


# W1-BEGIN:exact
class TabularEvaluator:
    """Backward DP over t = T..1 for deterministic policies on a finite task.

    Caches the kernels so many policies can be evaluated against one task cheaply.
    """

    def __init__(self, task: TaskSpec):
        if not task.is_finite or not isinstance(task.observations, FiniteSpace):
            raise UnsupportedOperationError(f"exact evaluation needs a finite tabular task; {task.name!r} is not")
        self.task = task
        m: TabularModel = task.model  # type: ignore[assignment]
        self._P = m.transition_table
        self._sigma = m.sensor
        self._r = m.reward_table
        self._p0 = m.init
        self._live = ~m.terminal_mask

    def expected_sum(self, table: Sequence[int] | np.ndarray) -> float:
        """E[sum of rewards] under the policy table, before clipping."""
        tab = np.asarray(table, dtype=np.int64)
        A = self._P.shape[1]
        # W[s, a] = P(pi(o) = a | s)
        W = self._sigma @ np.eye(A)[tab]
        r_eff = (W * self._r).sum(axis=1)
        P_eff = np.einsum("sa,sat->st", W, self._P)
        V = np.zeros(self._P.shape[0])
        for _ in range(self.task.horizon):
            V = np.where(self._live, r_eff + P_eff @ V, 0.0)
        return float(self._p0 @ V)

    def value(self, table) -> float:
        return min(self.expected_sum(table), self.task.success_threshold)

    def admissible(self, table) -> bool:
        return abs(self.value(table) - self.task.success_threshold) <= EXACT_TOL


def exact_return(task: TaskSpec, policy: SupportsAct) -> float:
    """Exact clipped expected return R(pi) on a finite task."""
    if not task.is_finite:
        raise UnsupportedOperationError(f"exact_return needs finite spaces; {task.name!r} is continuous")
    check_spaces(task, policy)
    return TabularEvaluator(task).value(policy_table(policy, task))
# W1-END:exact


# W1-BEGIN:admissibility
@dataclass(frozen=True)
class Exact:
    pass


@dataclass(frozen=True)
class Sampled:
    n_rollouts: int = 20
    tolerance: float = DEFAULT_TOLERANCE
    seed: int = 0

    def __post_init__(self):
        _validate.positive_int("n_rollouts", self.n_rollouts)
        if not math.isfinite(self.tolerance) or self.tolerance < 0:
            raise ConfigurationError("tolerance must be finite and >= 0")


EvalMode = Union[Exact, Sampled]


def is_admissible(task: TaskSpec, policy: SupportsAct, eval: EvalMode = Exact()) -> bool:
    if isinstance(eval, Exact):
        return abs(exact_return(task, policy) - task.success_threshold) <= EXACT_TOL
    if eval.tolerance < 0:
        raise ConfigurationError("tolerance must be finite and >= 0")
    est = estimate_return(task, policy, eval.n_rollouts, eval.seed)
    return est.value >= (1.0 - eval.tolerance) * task.success_threshold


def enumerate_admissible(
    task: TaskSpec,
    policies: Sequence[SupportsAct] | None = None,
    *,
    cap: int = ENUMERATION_CAP,
) -> list[SupportsAct]:
    """Admissible members of `policies`, or of every tabular policy when `policies` is None.

    Results are ordered lexicographically by policy table.
    """
    evaluator = TabularEvaluator(task)
    obs, acts = task.observations, task.actions
    if policies is None:
        if not isinstance(acts, FiniteSpace):
            raise UnsupportedOperationError("full enumeration needs a finite action space")
        count = acts.size ** obs.size
        if count > cap:
            raise EnumerationCapError("tabular policies", count, cap)
        # itertools.product is already lexicographic
        return [
            Policy.tabular(t, obs, acts)
            for t in itertools.product(range(acts.size), repeat=obs.size)
            if evaluator.admissible(t)
        ]
    keyed = []
    for p in policies:
        check_spaces(task, p)
        t = policy_table(p, task)
        if evaluator.admissible(t):
            keyed.append((t, p))
    keyed.sort(key=lambda kv: kv[0])
    return [p for _, p in keyed]
# W1-END:admissibility


__all__ = [
    "FiniteSpace", "BoxSpace", "Space", "TabularModel", "TaskSpec", "Policy", "Step",
    "ReturnEstimate", "TabularEvaluator", "Exact", "Sampled", "EvalMode",
    "rollout", "estimate_return", "exact_return", "is_admissible", "enumerate_admissible",
    "policy_table", "policy_to_dict", "policy_from_dict", "constant_policy", "squash_to_box",
    "check_spaces", "canonical_json", "rollout_seeds", "EXACT_TOL", "ENUMERATION_CAP",
]
