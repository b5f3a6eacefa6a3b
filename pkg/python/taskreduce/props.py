"""
Invariant suites runnable from the CLI (`taskreduce props`).

Each property is a function of a seeded generator that returns True or raises
AssertionError with a reason. Properties are grouped in suites by module; the
report lists every property with its trial count and first failure.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .complexity import check_monotonicity, consistency_check, exact_relative_complexity
from .diffnet import gradient_check, initialize
from .envs import toy
from .envs.cartpole import CartpoleParams, in_bounds
from .envs.gridworld import (
    GridWorldParams,
    admissible_family,
    canonical_layouts,
    layout_is_valid,
    rotation_family,
)
from .envs.speedtrack import tracking_reward
from .reduction import FunctionSpace, check_reduction, compose, partial_order_audit, verify_space_axioms
from .taskcore import (
    EXACT_TOL,
    Policy,
    TabularEvaluator,
    TaskSpec,
    enumerate_admissible,
    estimate_return,
    exact_return,
    policy_table,
)

logger = logging.getLogger(__name__)

SUITES = ("taskcore", "reduction", "complexity", "diffnet", "envs")


@dataclass
class Property:
    name: str
    suite: str
    fn: Callable[[np.random.Generator], bool]
    trials: int


@dataclass
class PropertyResult:
    name: str
    suite: str
    trials: int
    passed: bool
    failure: str | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "suite": self.suite, "trials": self.trials, "passed": self.passed,
                "failure": self.failure}


@dataclass
class PropsReport:
    results: list[PropertyResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "properties": [r.to_dict() for r in self.results]}


_REGISTRY: list[Property] = []


def prop(name: str, suite: str, trials: int = 20):
    def deco(fn):
        _REGISTRY.append(Property(name, suite, fn, trials))
        return fn
    return deco


# W10-BEGIN:generators
def random_task(rng: np.random.Generator, states: int = 3, actions: int = 2, observations: int | None = None,
                horizon: int = 3, deterministic: bool = False, slack: float = 1.0, name: str = "random") -> TaskSpec:
    """Random finite task whose R* is `slack` times the best return over deterministic policies."""
    O = states if observations is None else observations
    if deterministic:
        P = np.zeros((states, actions, states))
        P[np.arange(states)[:, None], np.arange(actions)[None, :], rng.integers(states, size=(states, actions))] = 1.0
        sigma = np.eye(states)[:, :O] if O == states else np.eye(O)[rng.integers(O, size=states)]
        p0 = np.eye(states)[rng.integers(states)]
    else:
        P = rng.dirichlet(np.ones(states), size=(states, actions))
        sigma = rng.dirichlet(np.ones(O), size=states)
        p0 = rng.dirichlet(np.ones(states))
    R = rng.integers(0, 3, size=(states, actions)).astype(np.float64)
    R[0, 0] = max(R[0, 0], 1.0)
    probe = TaskSpec.tabular(name, transition=P, sensor=sigma, reward=R, init=p0, success_threshold=1.0,
                             horizon=horizon)
    ev = TabularEvaluator(probe)
    best = max(ev.expected_sum(t) for t in itertools.product(range(actions), repeat=O))
    return probe.with_threshold(max(best * slack, 1e-3))


def random_table(rng: np.random.Generator, task: TaskSpec) -> tuple[int, ...]:
    return tuple(int(a) for a in rng.integers(task.actions.size, size=task.observations.size))
# W10-END:generators


# W10-BEGIN:taskcore
@prop("exact return never exceeds R*", "taskcore")
def _return_bounded(rng):
    task = random_task(rng, slack=float(rng.uniform(0.3, 1.0)))
    value = exact_return(task, Policy.tabular(random_table(rng, task), task.observations, task.actions))
    assert value <= task.success_threshold + EXACT_TOL, f"{value} > {task.success_threshold}"
    return True


@prop("sampled estimate equals the exact value on deterministic tasks", "taskcore")
def _sampled_matches_exact(rng):
    task = random_task(rng, deterministic=True)
    p = Policy.tabular(random_table(rng, task), task.observations, task.actions)
    est = estimate_return(task, p, 4, int(rng.integers(1 << 30))).value
    exact = exact_return(task, p)
    assert math.isclose(est, exact, abs_tol=1e-9), f"sampled {est} vs exact {exact}"
    return True


@prop("enumerated admissible policies are admissible", "taskcore", trials=10)
def _enumeration_sound(rng):
    task = random_task(rng, slack=float(rng.uniform(0.5, 1.0)))
    ev = TabularEvaluator(task)
    for p in enumerate_admissible(task):
        assert ev.admissible(policy_table(p)), f"policy {policy_table(p)} not admissible"
    return True
# W10-END:taskcore


# W10-BEGIN:reduction
@prop("every task reduces to itself under identity spaces", "reduction")
def _reflexive(rng):
    task = random_task(rng)
    H, G = FunctionSpace.identity(task.observations, "encoder"), FunctionSpace.identity(task.actions, "decoder")
    adm = enumerate_admissible(task)
    assert check_reduction(task, task, H, G, adm).holds, "identity reduction failed"
    return True


@prop("composing with identities leaves the policy unchanged", "reduction")
def _identity_compose(rng):
    task = random_task(rng)
    p = Policy.tabular(random_table(rng, task), task.observations, task.actions)
    h = FunctionSpace.identity(task.observations, "encoder")[0]
    g = FunctionSpace.identity(task.actions, "decoder")[0]
    assert policy_table(compose(g, p, h)) == policy_table(p)
    return True


@prop("cyclic relabelings pass the ordering audit", "reduction", trials=1)
def _cyclic_audit(rng):
    family, admissible = toy.cyclic_family()
    report = partial_order_audit(family, admissible)
    assert report.passed, [c.name for c in report.checks if not c.passed]
    assert all(all(row) for row in report.reduces), "cyclic tasks must all be equivalent"
    return True


@prop("grid-world goal directions are pairwise equivalent under rotations", "reduction", trials=1)
def _rotation_audit(rng):
    for m in (0, 1):
        family = rotation_family(GridWorldParams(n=2, m=m))
        axioms = verify_space_axioms(family)
        assert axioms.order_applicable, f"m={m}: rotation spaces miss {axioms.missing_identity}"
        seed = int(rng.integers(1 << 30))
        admissible = {i: admissible_family(t, 16, seed) for i, t in enumerate(family.tasks)}
        report = partial_order_audit(family, admissible, axioms)
        assert report.passed and all(all(row) for row in report.reduces), (m, report.to_dict()["reduces"])
    return True
# W10-END:reduction


# W10-BEGIN:complexity
@prop("complexity does not increase along nested spaces", "complexity", trials=1)
def _monotone(rng):
    for case in toy.nested_cases():
        rep = check_monotonicity(case.tau1, case.tau2, case.chain, case.admissible2())
        assert rep.monotone, f"{case.name}: {rep.values}"
        assert all(math.isclose(a, b, abs_tol=1e-9) for a, b in zip(rep.values, case.expected)), \
            f"{case.name}: {rep.values} != {case.expected}"
    return True


@prop("zero complexity exactly when the reduction holds", "complexity")
def _consistent(rng):
    t2 = random_task(rng, slack=float(rng.uniform(0.5, 1.0)), name="t2")
    t1 = random_task(rng, slack=float(rng.uniform(0.5, 1.0)), name="t1")
    adm = enumerate_admissible(t2)
    if not adm:
        return True
    H = FunctionSpace.all_functions(t1.observations, t2.observations, "encoder")
    G = FunctionSpace.identity(t2.actions, "decoder")
    rep = consistency_check(t1, t2, H, G, adm)
    assert rep.consistent, rep.to_dict()
    return True


@prop("complexity lies in [0, 1]", "complexity")
def _unit_interval(rng):
    t1, t2 = random_task(rng, name="t1"), random_task(rng, name="t2")
    adm = enumerate_admissible(t2)
    if not adm:
        return True
    H = FunctionSpace.identity(t1.observations, "encoder")
    G = FunctionSpace.identity(t2.actions, "decoder")
    v = exact_relative_complexity(t1, t2, H, G, adm).value
    assert 0.0 <= v <= 1.0, v
    return True
# W10-END:complexity


# W10-BEGIN:diffnet
@prop("backward matches finite differences", "diffnet", trials=100)
def _gradients(rng):
    depth = int(rng.integers(0, 4))
    dims = (int(rng.integers(1, 4)), *[int(rng.integers(2, 6))] * depth, int(rng.integers(1, 3)))
    net = initialize(dims, str(rng.choice(["tanh", "relu"])), rng=rng)
    x = rng.standard_normal((int(rng.integers(1, 5)), dims[0]))
    err = gradient_check(net, x, rng, step=1e-7)
    assert err < 1e-4, f"relative error {err:.3g} for dims {dims}"
    return True
# W10-END:diffnet


# W10-BEGIN:envs
@prop("cart-pole success sets agree up to the equilibrium shift", "envs", trials=200)
def _cartpole_symmetry(rng):
    up, down = CartpoleParams(direction="up"), CartpoleParams(direction="down")
    s = (float(rng.uniform(-3, 3)), float(rng.normal()), float(rng.uniform(-1, 1)), float(rng.normal()))
    shifted = (s[0], s[1], s[2] + math.pi, s[3])
    assert in_bounds(s, up) == in_bounds(shifted, down), s
    return True


@prop("speed-tracking reward lies in [0, 1]", "envs", trials=200)
def _speed_reward(rng):
    r = tracking_reward(float(rng.uniform(-5, 5)), float(rng.uniform(0.3, 2.0)), float(rng.uniform(-1, 1)), 0.001)
    assert 0.0 <= r <= 1.0, r
    return True


@prop("grid-world layouts always leave a path to the goal", "envs", trials=3)
def _layouts_connected(rng):
    params = GridWorldParams(n=2, m=1, max_layouts=8)
    for o in canonical_layouts(params, int(rng.integers(1 << 30))):
        assert layout_is_valid(params, o, (0, params.n)), o
    return True
# W10-END:envs


def run_props(suites: tuple[str, ...] | None = None, seed: int = 0, trials_scale: float = 1.0) -> PropsReport:
    """Run the selected suites (all by default) with per-property generators spawned from `seed`."""
    chosen = suites or SUITES
    report = PropsReport()
    props = [p for p in _REGISTRY if p.suite in chosen]
    for p, seq in zip(props, np.random.SeedSequence(seed).spawn(len(props))):
        rng = np.random.default_rng(seq)
        trials = max(1, int(round(p.trials * trials_scale)))
        failure = None
        for t in range(trials):
            try:
                if not p.fn(rng):
                    failure = f"trial {t}: returned False"
            except AssertionError as e:
                failure = f"trial {t}: {e}"
            if failure:
                break
        logger.info("%s / %s: %s", p.suite, p.name, "ok" if failure is None else failure)
        report.results.append(PropertyResult(p.name, p.suite, trials, failure is None, failure))
    return report


__all__ = ["SUITES", "Property", "PropertyResult", "PropsReport", "prop", "run_props", "random_task", "random_table"]
