"""
Relative complexity of task 1 with respect to task 2.

    C = max over admissible pi2 of  min over (h, g) of  1 - R1(g . pi2 . h) / R1*

computed exactly on finite tasks with explicit spaces, plus the consistency
oracle tying C = 0 to the exact reduction verdict.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ComplexityUndefinedError, ConfigurationError
from .reduction import FunctionSpace, check_reduction, compose, prepare_spaces, verified_tables
from .taskcore import (
    EXACT_TOL,
    Policy,
    TabularEvaluator,
    TaskSpec,
    canonical_json,
    policy_table,
    policy_to_dict,
)
from .types import SupportsAct


@dataclass(frozen=True, eq=False)
class ComplexityResult:
    value: float
    method: str
    attaining_policy: Any
    attaining_pair: Any
    seed: int | None = None
    alpha: float | None = None
    inner_admissible: bool = True
    config_digest: str = ""
    metadata: Mapping[str, Any] = field(default_factory=dict)
    artifacts: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("exact", "adversarial"):
            raise ConfigurationError(f"method must be 'exact' or 'adversarial', got {self.method!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ConfigurationError(f"complexity value {self.value!r} is outside [0, 1]")

    def to_dict(self) -> dict:
        return {
            "value": float(self.value),
            "method": self.method,
            "alpha": self.alpha,
            "seed": self.seed,
            "inner_admissible": bool(self.inner_admissible),
            "config_digest": self.config_digest,
            "attaining_policy": _ref(self.attaining_policy),
            "attaining_pair": _ref(self.attaining_pair),
            "metadata": dict(self.metadata),
            "artifacts": dict(self.artifacts),
        }


def _ref(obj):
    if obj is None or isinstance(obj, (int, str, dict, list)):
        return obj
    if isinstance(obj, Policy):
        return policy_to_dict(obj)
    if isinstance(obj, tuple):
        return [_ref(o) for o in obj]
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return repr(obj)


def _snap(value: float, r_star: float) -> float:
    return r_star if abs(value - r_star) <= EXACT_TOL else value


def exact_digest(tau1: TaskSpec, tau2: TaskSpec, H: FunctionSpace, G: FunctionSpace, tables: Sequence) -> str:
    h = hashlib.sha256()
    h.update(canonical_json({
        "tasks": [tau1.digest, tau2.digest],
        "H": [m.extension() for m in H.members],
        "G": [m.extension() for m in G.members],
        "admissible": [list(map(int, t)) for t in tables],
    }).encode())
    return h.hexdigest()[:16]


def exact_relative_complexity(
    tau1: TaskSpec,
    tau2: TaskSpec,
    H: FunctionSpace,
    G: FunctionSpace,
    admissible2: Sequence[SupportsAct],
) -> ComplexityResult:
    """Exact sup-inf over the supplied admissible family and explicit spaces.

    Ties keep the first policy and the first (h, g) in iteration order.
    """
    if not admissible2:
        raise ComplexityUndefinedError("Π*₂ empty: C undefined")
    tables = verified_tables(tau2, admissible2)
    Hb, Gb = prepare_spaces(tau1, tau2, H, G)
    ev1 = TabularEvaluator(tau1)
    r_star = tau1.success_threshold
    h_tabs, g_tabs = Hb.tables(), Gb.tables()
    best = (-1.0, -1, (-1, -1))
    for pi, t in enumerate(tables):
        inner_best, pair = np.inf, (-1, -1)
        for hi, h in enumerate(h_tabs):
            acts = t[h]
            for gi, g in enumerate(g_tabs):
                loss = 1.0 - _snap(ev1.value(g[acts]), r_star) / r_star
                if loss < inner_best:
                    inner_best, pair = loss, (hi, gi)
            if inner_best == 0.0:
                break
        if inner_best > best[0]:
            best = (inner_best, pi, pair)
    value, pi, (hi, gi) = best
    value = min(max(float(value), 0.0), 1.0)
    return ComplexityResult(
        value=value,
        method="exact",
        attaining_policy=admissible2[pi],
        attaining_pair=(Hb[hi], Gb[gi]),
        inner_admissible=True,
        config_digest=exact_digest(tau1, tau2, Hb, Gb, tables),
        metadata={"policy_index": pi, "h_index": hi, "g_index": gi, "quantified": len(tables)},
    )


def recompute(tau1: TaskSpec, result: ComplexityResult) -> float:
    """Re-evaluate the recorded attaining triple exactly on task 1."""
    h, g = result.attaining_pair
    composed = compose(g, result.attaining_policy, h)
    ev1 = TabularEvaluator(tau1)
    r = _snap(ev1.value(policy_table(composed, tau1)), tau1.success_threshold)
    return 1.0 - r / tau1.success_threshold


@dataclass(frozen=True)
class ConsistencyReport:
    value: float
    holds: bool
    consistent: bool
    recomputed: float

    def to_dict(self) -> dict:
        return {"value": self.value, "holds": self.holds, "consistent": self.consistent,
                "recomputed": self.recomputed}


def consistency_check(tau1, tau2, H, G, admissible2) -> ConsistencyReport:
    """C = 0 exactly when the reduction holds on the same quantification set."""
    res = exact_relative_complexity(tau1, tau2, H, G, admissible2)
    verdict = check_reduction(tau1, tau2, H, G, admissible2)
    again = recompute(tau1, res)
    consistent = ((res.value == 0.0) == verdict.holds) and abs(again - res.value) <= EXACT_TOL
    return ConsistencyReport(res.value, verdict.holds, consistent, again)


@dataclass(frozen=True)
class MonotonicityReport:
    values: tuple[float, ...]
    monotone: bool

    def to_dict(self) -> dict:
        return {"values": list(self.values), "monotone": self.monotone}


def check_monotonicity(
    tau1: TaskSpec,
    tau2: TaskSpec,
    nested: Sequence[tuple[FunctionSpace, FunctionSpace]],
    admissible2: Sequence[SupportsAct],
) -> MonotonicityReport:
    """Values along a chain of growing (H, G) pairs must not increase."""
    for (H0, G0), (H1, G1) in zip(nested, nested[1:]):
        if not (H0.extensions() <= H1.extensions() and G0.extensions() <= G1.extensions()):
            raise ConfigurationError("space chain is not nested")
    values = tuple(exact_relative_complexity(tau1, tau2, H, G, admissible2).value for H, G in nested)
    return MonotonicityReport(values, all(b <= a for a, b in zip(values, values[1:])))


__all__ = [
    "ComplexityResult", "ConsistencyReport", "MonotonicityReport", "exact_relative_complexity",
    "recompute", "consistency_check", "check_monotonicity", "exact_digest",
]
