"""
Cart-pole balancing in two gravity frames.

Both tasks share the classic frictionless cart-pole physics (explicit Euler,
angle measured from upright). The up task balances around theta = 0 (unstable);
the down task keeps the pole near theta = pi (stable). A step pays 1 while the
pole stays within `angle_limit_deg` of the task's equilibrium and the cart stays
within `x_limit`; the first out-of-bounds state ends the episode.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .. import _validate
from ..errors import ConfigurationError
from ..taskcore import BoxSpace, FiniteSpace, TaskSpec

ACTION_LABELS = ("none", "left", "right")
OBS_BOUNDS = (4.8, 10.0, 2.0 * math.pi, 10.0)


@dataclass(frozen=True)
class CartpoleParams:
    direction: str = "up"
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    half_length: float = 0.5
    force: float = 10.0
    tau: float = 0.02
    x_limit: float = 2.4
    angle_limit_deg: float = 24.0
    horizon: int = 200
    init_noise: float = 0.05

    def __post_init__(self):
        if self.direction not in ("up", "down"):
            raise ConfigurationError(f"direction must be 'up' or 'down', got {self.direction!r}")
        for name in ("gravity", "cart_mass", "pole_mass", "half_length", "force", "tau", "x_limit", "angle_limit_deg"):
            _validate.positive_real(name, getattr(self, name))
        _validate.positive_int("horizon", self.horizon)
        _validate.nonneg_real("init_noise", self.init_noise)

    @property
    def equilibrium(self) -> float:
        return 0.0 if self.direction == "up" else math.pi

    @property
    def angle_limit(self) -> float:
        return math.radians(self.angle_limit_deg)

    def to_dict(self) -> dict:
        return asdict(self)


def angle_error(theta: float, reference: float) -> float:
    """theta - reference wrapped to [-pi, pi)."""
    return (theta - reference + math.pi) % (2.0 * math.pi) - math.pi


def in_bounds(state, params: CartpoleParams) -> bool:
    x, _, theta, _ = state
    return abs(x) <= params.x_limit and abs(angle_error(theta, params.equilibrium)) < params.angle_limit


def physics_step(state, action: int, params: CartpoleParams) -> tuple[float, float, float, float]:
    x, x_dot, theta, theta_dot = state
    f = (0.0, -params.force, params.force)[int(action)]
    total = params.cart_mass + params.pole_mass
    pml = params.pole_mass * params.half_length
    cos, sin = math.cos(theta), math.sin(theta)
    temp = (f + pml * theta_dot * theta_dot * sin) / total
    theta_acc = (params.gravity * sin - cos * temp) / (
        params.half_length * (4.0 / 3.0 - params.pole_mass * cos * cos / total))
    x_acc = temp - pml * theta_acc * cos / total
    dt = params.tau
    return (x + dt * x_dot, x_dot + dt * x_acc, theta + dt * theta_dot, theta_dot + dt * theta_acc)


class CartpoleModel:
    """Deterministic dynamics with a noisy start; states are 4-tuples (x, x_dot, theta, theta_dot)."""

    def __init__(self, params: CartpoleParams):
        self.params = params

    def initial(self, rng: np.random.Generator):
        p = self.params
        s = rng.uniform(-p.init_noise, p.init_noise, size=4)
        s[2] += p.equilibrium
        return tuple(float(v) for v in s)

    def observe(self, state, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(state, dtype=np.float64)

    def transition(self, state, action, rng: np.random.Generator):
        return physics_step(state, action, self.params)

    def reward(self, state, action) -> float:
        return 1.0 if in_bounds(state, self.params) else 0.0

    def terminal(self, state) -> bool:
        return not in_bounds(state, self.params)


def make_cartpole(direction: str = "up", params: CartpoleParams | None = None) -> TaskSpec:
    p = CartpoleParams(direction=direction) if params is None else params
    if params is not None and params.direction != direction:
        p = CartpoleParams(**{**params.to_dict(), "direction": direction})
    box = BoxSpace.symmetric(OBS_BOUNDS)
    return TaskSpec(
        name=f"cartpole-{direction}",
        states=box,
        actions=FiniteSpace(3, ACTION_LABELS),
        observations=box,
        model=CartpoleModel(p),
        success_threshold=float(p.horizon),
        horizon=p.horizon,
        params={"env": "cartpole", **p.to_dict()},
    )


__all__ = ["CartpoleParams", "CartpoleModel", "make_cartpole", "in_bounds", "angle_error", "physics_step",
           "ACTION_LABELS"]
