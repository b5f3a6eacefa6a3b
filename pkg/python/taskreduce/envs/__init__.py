"""Task generators: rotational grid worlds, cart-pole, speed tracking and toy tasks."""
from .cartpole import CartpoleParams, make_cartpole
from .gridworld import (
    GridWorldParams,
    admissible_family,
    make_gridworld,
    optimal_policy,
    rotation_decoder,
    rotation_encoder,
    rotation_family,
)
from .speedtrack import SpeedTrackParams, make_speed_tracker
from .calibration import CalibrationRecord, calibrate_success_threshold

__all__ = [
    "CartpoleParams", "make_cartpole", "GridWorldParams", "make_gridworld", "rotation_encoder",
    "rotation_decoder", "rotation_family", "admissible_family", "optimal_policy", "SpeedTrackParams",
    "make_speed_tracker", "CalibrationRecord", "calibrate_success_threshold",
]
