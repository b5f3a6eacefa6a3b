"""Success-threshold calibration from an individually trained policy."""
from __future__ import annotations

import logging
from dataclasses import dataclass

from .. import _validate
from ..advest import EstimatorConfig, train_individual
from ..errors import CalibrationError
from ..learners import ArchSpec
from ..taskcore import TaskSpec

logger = logging.getLogger(__name__)

CALIBRATION_FACTOR = 0.95
DEFAULT_FLOOR_FRACTION = 0.1


@dataclass(frozen=True)
class CalibrationRecord:
    task: str
    seed: int
    individual_return: float
    success_threshold: float
    iterations: int
    converged: bool

    def to_dict(self) -> dict:
        return {
            "task": self.task, "seed": self.seed, "individual_return": self.individual_return,
            "success_threshold": self.success_threshold, "iterations": self.iterations,
            "converged": self.converged,
        }


def threshold_from_return(individual_return: float, factor: float = CALIBRATION_FACTOR) -> float:
    return factor * _validate.nonneg_real("individual_return", individual_return)


def calibrate_success_threshold(task: TaskSpec, policy_arch: ArchSpec, config: EstimatorConfig,
                                floor: float | None = None, critic_arch: ArchSpec | None = None,
                                ) -> tuple[TaskSpec, CalibrationRecord]:
    """Train a policy on `task` alone and set R* to 0.95 of its estimated return.

    The return is estimated against an unbounded threshold, so it is never clipped
    by the task's current R*. `floor` defaults to a tenth of the horizon.
    """
    floor = DEFAULT_FLOOR_FRACTION * task.horizon if floor is None else _validate.nonneg_real("floor", floor)
    open_task = task.with_threshold(float(task.horizon))
    result = train_individual(open_task, policy_arch, config, critic_arch)
    ret = result.estimate.value
    if ret <= floor:
        raise CalibrationError(
            f"individual training on {task.name!r} returned {ret:.4g}, not above the floor {floor:.4g}")
    r_star = threshold_from_return(ret)
    logger.info("calibrated %s: return=%.4g R*=%.4g (seed %d)", task.name, ret, r_star, result.seed)
    record = CalibrationRecord(task.name, result.seed, ret, r_star, result.iterations, result.converged)
    return task.with_threshold(r_star, calibration=record.to_dict()), record


__all__ = ["CalibrationRecord", "calibrate_success_threshold", "threshold_from_return", "CALIBRATION_FACTOR"]
