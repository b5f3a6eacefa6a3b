# A quick, under-trained calibration run; raise max_iters for a usable R*.
import logging

from taskreduce import ArchSpec, EstimatorConfig, make_cartpole
from taskreduce.envs import calibrate_success_threshold
from taskreduce.errors import CalibrationError


def main():
    logging.basicConfig(level=logging.INFO)
    task = make_cartpole("up")
    config = EstimatorConfig(max_iters=300, eval_rollouts=5, seed=0)
    try:
        calibrated, record = calibrate_success_threshold(task, ArchSpec(2, 32), config)
    except CalibrationError as e:
        print("calibration failed:", e)
        return
    print(record.to_dict())
    print("R* =", calibrated.success_threshold)


if __name__ == "__main__":
    main()
