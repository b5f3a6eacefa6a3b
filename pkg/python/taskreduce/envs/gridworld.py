"""
Rotational grid-world family.

The world is the integer lattice [-n, n]^2. A robot moves one of the four
cardinal directions (indexed clockwise: N=0, E=1, S=2, W=3) by `step_d` cells,
staying put when the move leaves the grid or hits an obstacle. The goal sits at
the middle of one edge: N (0, n), E (n, 0), S (0, -n), W (-n, 0). Entering the
goal pays 1 and ends the episode; R* = 1.

The observation is the full map as a fixed-order tuple of locations: obstacles
sorted lexicographically, then the goal, then the robot. p0 is uniform over
(layout, start cell) pairs, so layouts and starts are both randomized.

Layouts for a direction are the N-frame layouts rotated clockwise, which keeps
the four goal tasks related by exact quarter turns.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .. import _validate
from ..errors import ConfigurationError, EnumerationCapError
from ..reduction import Decoder, Encoder, SpaceFamily, register_closed_form
from ..taskcore import Policy, TaskSpec
from ..types import Direction

DIRECTIONS: tuple[Direction, ...] = ("N", "E", "S", "W")
MOVES = ((0, 1), (1, 0), (0, -1), (-1, 0))
STATE_CAP = 5000

Cell = tuple[int, int]


# W6-BEGIN:rotations
def rotate_ccw(cell: Cell, k: int = 1) -> Cell:
    x, y = cell
    for _ in range(k % 4):
        x, y = -y, x
    return (x, y)


def rotate_cw(cell: Cell, k: int = 1) -> Cell:
    return rotate_ccw(cell, -k % 4)


@register_closed_form("rot90_obs")
def rot90_obs(label: tuple, k: int = 1) -> tuple:
    """Rotate every location of a map observation counter-clockwise k quarter turns."""
    cells = [rotate_ccw(c, k) for c in label]
    return tuple(sorted(cells[:-2])) + tuple(cells[-2:])


@register_closed_form("rot_action_mod4")
def rot_action_mod4(action: int, k: int = 1) -> int:
    return (int(action) + k) % 4


def rotation_encoder(k: int) -> Encoder:
    """Quarter-turn k on every location of the map (counter-clockwise)."""
    return Encoder.closed_form("rot90_obs", k=int(k) % 4)


def rotation_decoder(k: int) -> Decoder:
    """Cardinal action i -> i + k mod 4."""
    return Decoder.closed_form("rot_action_mod4", k=int(k) % 4)
# W6-END:rotations


# W6-BEGIN:params
@dataclass(frozen=True)
class GridWorldParams:
    n: int = 2
    m: int = 0
    goal_dir: Direction = "N"
    step_d: int = 1
    horizon: int | None = None
    max_layouts: int | None = None
    retry_cap: int = 1000

    def __post_init__(self):
        _validate.positive_int("n", self.n)
        _validate.nonneg_int("m", self.m)
        _validate.positive_int("step_d", self.step_d)
        _validate.positive_int("retry_cap", self.retry_cap)
        if self.goal_dir not in DIRECTIONS:
            raise ConfigurationError(f"goal_dir must be one of {DIRECTIONS}, got {self.goal_dir!r}")
        if self.horizon is not None:
            _validate.positive_int("horizon", self.horizon)
        if self.max_layouts is not None:
            _validate.positive_int("max_layouts", self.max_layouts)
        if self.m > (2 * self.n + 1) ** 2 - 2:
            raise ConfigurationError("m leaves no free cell for the robot")

    @property
    def cells(self) -> list[Cell]:
        r = range(-self.n, self.n + 1)
        return [(x, y) for x in r for y in r]

    @property
    def dir_index(self) -> int:
        return DIRECTIONS.index(self.goal_dir)

    def goal(self) -> Cell:
        return rotate_cw((0, self.n), self.dir_index)

    def resolved_horizon(self) -> int:
        return self.horizon or (2 * self.n + 1) ** 2

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "goal_dir": self.goal_dir, "step_d": self.step_d,
                "horizon": self.resolved_horizon(), "max_layouts": self.max_layouts}
# W6-END:params


# W6-BEGIN:layouts
def _move(cell: Cell, action: int, d: int, n: int, blocked: frozenset) -> Cell:
    dx, dy = MOVES[action]
    nxt = (cell[0] + d * dx, cell[1] + d * dy)
    if abs(nxt[0]) > n or abs(nxt[1]) > n or nxt in blocked:
        return cell
    return nxt


def distances_to_goal(params: GridWorldParams, obstacles: Sequence[Cell], goal: Cell) -> dict[Cell, int]:
    """Shortest move counts to the goal for every free cell that can reach it."""
    blocked = frozenset(obstacles)
    free = [c for c in params.cells if c not in blocked]
    preds: dict[Cell, list[Cell]] = {c: [] for c in free}
    for c in free:
        if c == goal:
            continue
        for a in range(4):
            nxt = _move(c, a, params.step_d, params.n, blocked)
            if nxt != c:
                preds[nxt].append(c)
    dist = {goal: 0}
    queue = deque([goal])
    while queue:
        c = queue.popleft()
        for p in preds[c]:
            if p not in dist:
                dist[p] = dist[c] + 1
                queue.append(p)
    return dist


def layout_is_valid(params: GridWorldParams, obstacles: Sequence[Cell], goal: Cell) -> bool:
    """Every free cell has a path to the goal."""
    dist = distances_to_goal(params, obstacles, goal)
    return len(dist) == len(params.cells) - len(obstacles)


def canonical_layouts(params: GridWorldParams, layout_seed: int = 0) -> list[tuple[Cell, ...]]:
    """Valid N-frame obstacle sets: all of them, or a seeded sample of `max_layouts`."""
    goal = (0, params.n)
    N = replace_dir(params, "N")
    candidates = [c for c in params.cells if c != goal]
    if params.max_layouts is None:
        total = math.comb(len(candidates), params.m)
        if total > STATE_CAP:
            raise EnumerationCapError("obstacle layouts", total, STATE_CAP)
        out = [tuple(sorted(o)) for o in itertools.combinations(candidates, params.m)]
        out = [o for o in out if layout_is_valid(N, o, goal)]
        if not out:
            raise ConfigurationError("no obstacle layout leaves a path to the goal")
        return out
    rng = np.random.default_rng(layout_seed)
    found: dict[tuple[Cell, ...], None] = {}
    for _ in range(params.retry_cap):
        idx = rng.choice(len(candidates), size=params.m, replace=False)
        o = tuple(sorted(candidates[i] for i in idx))
        if o not in found and layout_is_valid(N, o, goal):
            found[o] = None
            if len(found) == params.max_layouts:
                break
    if not found:
        raise ConfigurationError(f"no valid obstacle layout found within {params.retry_cap} attempts")
    return sorted(found)


def replace_dir(params: GridWorldParams, goal_dir: Direction) -> GridWorldParams:
    return replace(params, goal_dir=goal_dir)
# W6-END:layouts


# W6-BEGIN:make
def make_gridworld(params: GridWorldParams, layout_seed: int = 0) -> TaskSpec:
    k = params.dir_index
    goal = params.goal()
    layouts = [tuple(sorted(rotate_cw(c, k) for c in o)) for o in canonical_layouts(params, layout_seed)]
    labels: list[tuple] = []
    meta: list[tuple[int, Cell]] = []
    for li, obstacles in enumerate(layouts):
        blocked = set(obstacles)
        for cell in params.cells:
            if cell not in blocked:
                labels.append(obstacles + (goal, cell))
                meta.append((li, cell))
    S = len(labels)
    if S > STATE_CAP:
        raise EnumerationCapError("grid-world states", S, STATE_CAP)
    index = {lab: i for i, lab in enumerate(labels)}
    P = np.zeros((S, 4, S))
    R = np.zeros((S, 4))
    p0 = np.zeros(S)
    terminal = np.zeros(S, dtype=bool)
    for s, (li, cell) in enumerate(meta):
        obstacles = layouts[li]
        if cell == goal:
            terminal[s] = True
            P[s, :, s] = 1.0
            continue
        p0[s] = 1.0
        blocked = frozenset(obstacles)
        for a in range(4):
            nxt = _move(cell, a, params.step_d, params.n, blocked)
            P[s, a, index[obstacles + (goal, nxt)]] = 1.0
            if nxt == goal:
                R[s, a] = 1.0
    p0 /= p0.sum()
    return TaskSpec.tabular(
        f"grid-{params.goal_dir}-n{params.n}-m{params.m}",
        transition=P, sensor=np.eye(S), reward=R, init=p0, terminal=terminal,
        success_threshold=1.0, horizon=params.resolved_horizon(),
        state_labels=labels, observation_labels=labels,
        params={"env": "gridworld", **params.to_dict(), "layout_seed": layout_seed, "layouts": len(layouts)},
    )
# W6-END:make


# W6-BEGIN:policies
def _distances(task: TaskSpec) -> np.ndarray:
    """Moves-to-goal per state from the deterministic kernel (inf when unreachable)."""
    m = task.model
    nxt = m.transition_table.argmax(axis=2)
    S = m.n_states
    dist = np.full(S, np.inf)
    dist[m.terminal_mask] = 0.0
    for _ in range(S):
        cand = np.where(m.terminal_mask, 0.0, 1.0 + dist[nxt].min(axis=1))
        if np.array_equal(cand, dist):
            break
        dist = cand
    return dist


def optimal_actions(task: TaskSpec) -> list[tuple[int, ...]]:
    """Per state, every action that makes progress along a shortest path."""
    m = task.model
    nxt = m.transition_table.argmax(axis=2)
    dist = _distances(task)
    out = []
    for s in range(m.n_states):
        if m.terminal_mask[s]:
            out.append(tuple(range(m.n_actions)))
        else:
            out.append(tuple(a for a in range(m.n_actions) if dist[nxt[s, a]] == dist[s] - 1))
    return out


def tie_break_policy(task: TaskSpec, order: Sequence[int]) -> Policy:
    """Shortest-path policy picking the first optimal action in `order`."""
    opts = optimal_actions(task)
    table = [next(a for a in order if a in o) for o in opts]
    return Policy.tabular(table, task.observations, task.actions)


def optimal_policy(task: TaskSpec) -> Policy:
    return tie_break_policy(task, range(4))


def admissible_family(task: TaskSpec, random_count: int = 64, seed: int = 0) -> list[Policy]:
    """Every tie-break ordering of the shortest-path policy plus seeded random ones, deduplicated."""
    opts = optimal_actions(task)
    seen: dict[tuple[int, ...], Policy] = {}
    for order in itertools.permutations(range(4)):
        p = tie_break_policy(task, order)
        seen.setdefault(p.table, p)
    rng = np.random.default_rng(seed)
    for _ in range(random_count):
        table = tuple(int(o[rng.integers(len(o))]) for o in opts)
        if table not in seen:
            seen[table] = Policy.tabular(table, task.observations, task.actions)
    return list(seen.values())


def rotation_family(params: GridWorldParams, layout_seed: int = 0) -> SpaceFamily:
    """The four goal-direction tasks with every quarter-turn encoder/decoder offered per pair."""
    tasks = [make_gridworld(replace_dir(params, d), layout_seed) for d in DIRECTIONS]
    return SpaceFamily.closed_form(tasks, [rotation_encoder(k) for k in range(4)],
                                   [rotation_decoder(k) for k in range(4)])
# W6-END:policies


__all__ = [
    "GridWorldParams", "DIRECTIONS", "make_gridworld", "rotation_encoder", "rotation_decoder",
    "rot90_obs", "rot_action_mod4", "rotate_ccw", "rotate_cw", "canonical_layouts", "layout_is_valid",
    "distances_to_goal", "optimal_actions", "optimal_policy", "tie_break_policy", "admissible_family",
    "rotation_family", "replace_dir",
]
