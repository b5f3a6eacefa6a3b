import pytest

from taskreduce.envs.gridworld import (
    DIRECTIONS,
    GridWorldParams,
    admissible_family,
    canonical_layouts,
    distances_to_goal,
    layout_is_valid,
    make_gridworld,
    optimal_actions,
    optimal_policy,
    rotate_cw,
)
from taskreduce.errors import ConfigurationError, EnumerationCapError
from taskreduce.taskcore import TabularEvaluator, exact_return, policy_table


@pytest.fixture(scope="module")
def small():
    return make_gridworld(GridWorldParams(n=1))


class TestParams:
    @pytest.mark.parametrize("d,goal", [("N", (0, 2)), ("E", (2, 0)), ("S", (0, -2)), ("W", (-2, 0))])
    def test_goal_on_edge_midpoint(self, d, goal):
        assert GridWorldParams(n=2, goal_dir=d).goal() == goal

    def test_default_horizon(self):
        assert GridWorldParams(n=2).resolved_horizon() == 25

    def test_rejects_unknown_direction(self):
        with pytest.raises(ConfigurationError, match="goal_dir must be one of"):
            GridWorldParams(goal_dir="NE")

    def test_rejects_full_grid(self):
        with pytest.raises(ConfigurationError, match="no free cell"):
            GridWorldParams(n=1, m=8)


class TestLayouts:
    def test_walled_in_goal_is_invalid(self):
        params = GridWorldParams(n=1, m=3)
        assert not layout_is_valid(params, [(-1, 1), (1, 1), (0, 0)], (0, 1))
        assert layout_is_valid(params, [(-1, 1), (1, 1), (1, 0)], (0, 1))

    def test_distances(self):
        dist = distances_to_goal(GridWorldParams(n=1), [], (0, 1))
        assert dist[(0, 1)] == 0 and dist[(0, -1)] == 2 and dist[(-1, -1)] == 3

    def test_single_obstacles_all_valid(self):
        assert len(canonical_layouts(GridWorldParams(n=2, m=1))) == 24

    def test_sampled_layouts_are_seeded(self):
        params = GridWorldParams(n=2, m=2, max_layouts=5)
        a = canonical_layouts(params, 3)
        assert a == canonical_layouts(params, 3) and len(a) == 5
        assert all(layout_is_valid(params, o, (0, 2)) for o in a)

    def test_enumeration_cap(self):
        with pytest.raises(EnumerationCapError):
            canonical_layouts(GridWorldParams(n=3, m=4))


class TestDynamics:
    def test_state_space(self, small):
        assert small.name == "grid-N-n1-m0"
        assert small.observations.size == 9
        assert small.params["layouts"] == 1

    def test_start_excludes_goal(self, small):
        m = small.model
        goal = small.observations.index_of(((0, 1), (0, 1)))
        assert m.terminal_mask[goal] and m.init[goal] == 0.0
        assert m.init.sum() == pytest.approx(1.0)

    def test_entering_goal_pays_one(self, small):
        m = small.model
        s = small.observations.index_of(((0, 1), (0, 0)))
        assert m.reward_table[s, 0] == 1.0
        assert m.reward_table[s].sum() == 1.0

    def test_walls_keep_robot_in_place(self, small):
        m = small.model
        s = small.observations.index_of(((0, 1), (1, 1)))
        assert m.transition_table[s, 1, s] == 1.0

    def test_step_size(self):
        task = make_gridworld(GridWorldParams(n=2, step_d=2))
        m = task.model
        s = task.observations.index_of(((0, 2), (0, -2)))
        t = task.observations.index_of(((0, 2), (0, 0)))
        assert m.transition_table[s, 0, t] == 1.0

    def test_rotated_layouts(self):
        north = make_gridworld(GridWorldParams(n=2, m=1))
        east = make_gridworld(GridWorldParams(n=2, m=1, goal_dir="E"))
        obstacles = lambda task: {lab[0] for lab in task.observations.labels}
        assert obstacles(east) == {rotate_cw(c) for c in obstacles(north)}


class TestPolicies:
    @pytest.mark.parametrize("d", DIRECTIONS)
    def test_optimal_policy_always_succeeds(self, d):
        task = make_gridworld(GridWorldParams(n=2, m=1, goal_dir=d))
        assert exact_return(task, optimal_policy(task)) == pytest.approx(1.0, abs=1e-10)

    def test_optimal_actions_make_progress(self, small):
        opts = optimal_actions(small)
        s = small.observations.index_of(((0, 1), (-1, 0)))
        assert set(opts[s]) == {0, 1}

    def test_admissible_family_is_admissible_and_unique(self):
        task = make_gridworld(GridWorldParams(n=2, m=1))
        family = admissible_family(task, 32, 0)
        ev = TabularEvaluator(task)
        tables = [policy_table(p) for p in family]
        assert len(set(tables)) == len(tables)
        assert all(ev.admissible(t) for t in tables)
        assert [policy_table(p) for p in admissible_family(task, 32, 0)] == tables
