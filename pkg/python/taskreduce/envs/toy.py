"""
Handcrafted finite tasks small enough for brute-force oracles.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError
from ..reduction import Decoder, Encoder, FunctionSpace, SpaceFamily
from ..taskcore import FiniteSpace, TaskSpec, enumerate_admissible


def one_shot(name: str, rewards, init=None, success_threshold: float | None = None) -> TaskSpec:
    """Fully observed single-decision task: reward[s, a], horizon 1.

    R* defaults to the best achievable expected reward.
    """
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 2:
        raise ConfigurationError("rewards must be a (states, actions) matrix")
    S, A = r.shape
    p0 = np.full(S, 1.0 / S) if init is None else np.asarray(init, dtype=np.float64)
    P = np.zeros((S, A, S))
    for s in range(S):
        P[s, :, s] = 1.0
    r_star = float(p0 @ r.max(axis=1)) if success_threshold is None else success_threshold
    return TaskSpec.tabular(
        name, transition=P, sensor=np.eye(S), reward=r, init=p0,
        success_threshold=r_star, horizon=1, params={"kind": "one-shot", "rewards": r.tolist()},
    )


def unit_chain(horizon: int = 3, reward: float = 1.0, success_threshold: float = 10.0) -> TaskSpec:
    """One state, one action, constant reward per step."""
    return TaskSpec.tabular(
        f"chain-{horizon}", transition=[[[1.0]]], sensor=[[1.0]], reward=[[reward]], init=[1.0],
        success_threshold=success_threshold, horizon=horizon, params={"kind": "chain", "reward": reward},
    )


def coin_flip(n_actions: int = 2) -> TaskSpec:
    """Two equally likely states; only state 0 pays, whatever the action."""
    rewards = np.zeros((2, n_actions))
    rewards[0] = 1.0
    return one_shot("coin", rewards, success_threshold=1.0)


def relabel(task: TaskSpec, obs_perm: Sequence[int], action_perm: Sequence[int], name: str | None = None) -> TaskSpec:
    """Same task with observation o shown as obs_perm[o] and action a executed by action_perm[a]."""
    m = task.model
    op = np.asarray(obs_perm, dtype=np.int64)
    ap = np.asarray(action_perm, dtype=np.int64)
    if sorted(op.tolist()) != list(range(m.n_observations)) or sorted(ap.tolist()) != list(range(m.n_actions)):
        raise ConfigurationError("relabel needs permutations of the observation and action indices")
    sensor = np.zeros_like(m.sensor)
    sensor[:, op] = m.sensor
    # new action b behaves like old action a with action_perm[a] == b
    inv = np.argsort(ap)
    return TaskSpec.tabular(
        name or f"{task.name}~{''.join(map(str, op))}/{''.join(map(str, ap))}",
        transition=m.transition_table[:, inv, :], sensor=sensor, reward=m.reward_table[:, inv], init=m.init,
        terminal=m.terminal_mask, success_threshold=task.success_threshold, horizon=task.horizon,
        params={**task.params, "obs_perm": op.tolist(), "action_perm": ap.tolist()},
    )


def oracle_pair() -> tuple[TaskSpec, TaskSpec]:
    """2-observation/2-action pair with exact complexity 0.5 under identity spaces.

    Task 2 only needs action 0 at observation 0; task 1 needs action 0 everywhere,
    so the admissible task-2 policy (0, 1) halves task 1's return.
    """
    tau2 = one_shot("oracle-2", [[1.0, 0.0], [1.0, 1.0]], success_threshold=1.0)
    tau1 = one_shot("oracle-1", [[1.0, 0.0], [1.0, 0.0]], success_threshold=1.0)
    return tau1, tau2


def permutation_space(size: int, role: str = "encoder") -> FunctionSpace:
    kind = Encoder if role == "encoder" else Decoder
    sp = FiniteSpace(size)
    return FunctionSpace(tuple(kind.tabular(p, sp, sp) for p in itertools.permutations(range(size))),
                         sp, sp, contains_identity=True, closure_claim=True)


@dataclass(frozen=True)
class NestedCase:
    name: str
    tau1: TaskSpec
    tau2: TaskSpec
    chain: tuple[tuple[FunctionSpace, FunctionSpace], ...]
    expected: tuple[float, ...]

    def admissible2(self):
        return enumerate_admissible(self.tau2)


def _spaces(tau1: TaskSpec, tau2: TaskSpec, h: str, g: str) -> tuple[FunctionSpace, FunctionSpace]:
    O1, O2, A2, A1 = tau1.observations, tau2.observations, tau2.actions, tau1.actions
    H = FunctionSpace.identity(O1, "encoder") if h == "id" else FunctionSpace.all_functions(O1, O2, "encoder")
    G = FunctionSpace.identity(A2, "decoder") if g == "id" else FunctionSpace.all_functions(A2, A1, "decoder")
    return H, G


def nested_cases() -> list[NestedCase]:
    """Finite pairs with nested space chains and their brute-force complexity values."""
    cases = []

    t2 = one_shot("only-0", [[1.0, 0.0]])
    t1 = one_shot("only-1", [[0.0, 1.0]])
    cases.append(NestedCase("opposite-action", t1, t2,
                           (_spaces(t1, t2, "id", "id"), _spaces(t1, t2, "id", "all")), (1.0, 0.0)))

    t1, t2 = oracle_pair()
    cases.append(NestedCase("oracle", t1, t2,
                           (_spaces(t1, t2, "id", "id"), _spaces(t1, t2, "id", "all")), (0.5, 0.0)))

    t = one_shot("self", [[1.0, 0.0], [0.0, 1.0]])
    cases.append(NestedCase("self", t, t, (_spaces(t, t, "id", "id"), _spaces(t, t, "all", "all")), (0.0, 0.0)))

    t2 = one_shot("diagonal", [[1.0, 0.0], [0.0, 1.0]])
    t1 = relabel(t2, [1, 0], [0, 1], name="diagonal-swapped")
    cases.append(NestedCase("swapped-observations", t1, t2,
                           (_spaces(t1, t2, "id", "id"), _spaces(t1, t2, "all", "id")), (1.0, 0.0)))

    t2 = one_shot("mixed-2", [[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    t1 = one_shot("mixed-1", [[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    cases.append(NestedCase("partial", t1, t2,
                           (_spaces(t1, t2, "id", "id"), _spaces(t1, t2, "all", "id"), _spaces(t1, t2, "all", "all")),
                           (2.0 / 3.0, 0.0, 0.0)))
    return cases


def cyclic_family() -> tuple[SpaceFamily, dict[int, list]]:
    """Three relabelings of one task with permutation spaces: all mutually equivalent."""
    base = one_shot("cyclic-0", np.eye(3))
    tasks = (base, relabel(base, [1, 2, 0], [1, 2, 0], name="cyclic-1"), relabel(base, [2, 0, 1], [2, 0, 1], name="cyclic-2"))
    H, G = permutation_space(3, "encoder"), permutation_space(3, "decoder")
    idx = range(len(tasks))
    family = SpaceFamily(tasks, {(i, j): H for i in idx for j in idx}, {(j, i): G for i in idx for j in idx})
    return family, {i: enumerate_admissible(t) for i, t in enumerate(tasks)}


__all__ = [
    "one_shot", "unit_chain", "coin_flip", "relabel", "oracle_pair", "permutation_space",
    "NestedCase", "nested_cases", "cyclic_family",
]
