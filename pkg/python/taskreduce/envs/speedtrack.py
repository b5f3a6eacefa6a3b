"""
Point-mass speed tracking: a continuous stand-in for "walk at speed v".

A 1-D mass is pushed by a bounded force against linear drag. The policy sees
only its velocity; each step pays max(0, 1 - |v_t - v*| - penalty * a^2) with
a the normalized force in [-1, 1]. Speeds beyond `speed_limit` end the episode.
Until calibrated, R* is the horizon.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .. import _validate
from ..errors import ConfigurationError
from ..taskcore import BoxSpace, TaskSpec

SPEED_RANGE = (0.3, 2.0)


@dataclass(frozen=True)
class SpeedTrackParams:
    target_speed: float = 1.0
    horizon: int = 1000
    dt: float = 0.05
    mass: float = 1.0
    drag: float = 0.1
    max_force: float = 5.0
    speed_limit: float = 4.0
    action_penalty: float = 0.001
    init_noise: float = 0.05

    def __post_init__(self):
        v = _validate.finite_real("target_speed", self.target_speed)
        lo, hi = SPEED_RANGE
        if not lo <= v <= hi:
            raise ConfigurationError(f"target_speed must be in [{lo}, {hi}], got {v}")
        _validate.positive_int("horizon", self.horizon)
        for name in ("dt", "mass", "max_force", "speed_limit"):
            _validate.positive_real(name, getattr(self, name))
        for name in ("drag", "action_penalty", "init_noise"):
            _validate.nonneg_real(name, getattr(self, name))
        if self.speed_limit <= hi:
            raise ConfigurationError("speed_limit must exceed every admissible target speed")

    def to_dict(self) -> dict:
        return asdict(self)


def tracking_reward(velocity: float, target: float, action: float = 0.0, penalty: float = 0.0) -> float:
    return max(0.0, 1.0 - abs(velocity - target) - penalty * action * action)


class SpeedTrackModel:
    """States are (position, velocity) tuples; actions are 1-vectors of normalized force."""

    def __init__(self, params: SpeedTrackParams):
        self.params = params

    def initial(self, rng: np.random.Generator):
        n = self.params.init_noise
        return (0.0, float(rng.uniform(-n, n)))

    def observe(self, state, rng: np.random.Generator) -> np.ndarray:
        return np.array([state[1]])

    def _force(self, action) -> float:
        return float(np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[0], -1.0, 1.0))

    def transition(self, state, action, rng: np.random.Generator):
        p = self.params
        x, v = state
        f = self._force(action) * p.max_force
        return (x + p.dt * v, v + p.dt * (f - p.drag * v) / p.mass)

    def reward(self, state, action) -> float:
        p = self.params
        return tracking_reward(state[1], p.target_speed, self._force(action), p.action_penalty)

    def terminal(self, state) -> bool:
        return abs(state[1]) > self.params.speed_limit


def make_speed_tracker(v: float = 1.0, params: SpeedTrackParams | None = None) -> TaskSpec:
    base = {} if params is None else params.to_dict()
    p = SpeedTrackParams(**{**base, "target_speed": v})
    lim = p.speed_limit
    return TaskSpec(
        name=f"speed-{p.target_speed:g}",
        states=BoxSpace((-np.inf, -lim), (np.inf, lim)),
        actions=BoxSpace((-1.0,), (1.0,)),
        observations=BoxSpace((-lim,), (lim,)),
        model=SpeedTrackModel(p),
        success_threshold=float(p.horizon),
        horizon=p.horizon,
        params={"env": "speed-tracker", **p.to_dict()},
    )


__all__ = ["SpeedTrackParams", "SpeedTrackModel", "make_speed_tracker", "tracking_reward", "SPEED_RANGE"]
