import numpy as np
import pytest

from taskreduce.envs.speedtrack import SpeedTrackModel, SpeedTrackParams, make_speed_tracker, tracking_reward
from taskreduce.errors import ConfigurationError
from taskreduce.taskcore import BoxSpace


@pytest.mark.parametrize("velocity", [0.5, 1.5])
def test_half_reward_half_a_unit_off(velocity):
    assert tracking_reward(velocity, 1.0) == pytest.approx(0.5)


def test_reward_floor_and_penalty():
    assert tracking_reward(5.0, 1.0) == 0.0
    assert tracking_reward(1.0, 1.0, action=1.0, penalty=0.001) == pytest.approx(0.999)


@pytest.mark.parametrize("v", [0.2, 2.5])
def test_target_speed_range(v):
    with pytest.raises(ConfigurationError, match="target_speed must be in"):
        SpeedTrackParams(target_speed=v)


def test_speed_limit_must_exceed_range():
    with pytest.raises(ConfigurationError, match="speed_limit"):
        SpeedTrackParams(speed_limit=1.5)


def test_task_surface():
    task = make_speed_tracker(1.2)
    assert task.name == "speed-1.2"
    assert isinstance(task.actions, BoxSpace) and task.actions.dims == 1
    assert task.success_threshold == float(task.horizon) == 1000.0


class TestDynamics:
    def test_drag_slows_the_mass(self):
        m = SpeedTrackModel(SpeedTrackParams())
        _, v = m.transition((0.0, 2.0), np.array([0.0]), None)
        assert 0.0 < v < 2.0

    def test_force_is_clipped(self):
        m = SpeedTrackModel(SpeedTrackParams(drag=0.0))
        assert m.transition((0.0, 0.0), np.array([10.0]), None) == m.transition((0.0, 0.0), np.array([1.0]), None)

    def test_observation_is_velocity_only(self):
        m = SpeedTrackModel(SpeedTrackParams())
        np.testing.assert_array_equal(m.observe((3.0, 0.7), None), [0.7])

    def test_runaway_speed_terminates(self):
        m = SpeedTrackModel(SpeedTrackParams())
        assert m.terminal((0.0, 4.5)) and not m.terminal((0.0, 3.9))
