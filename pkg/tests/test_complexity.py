import pytest
from hypothesis import given, settings, strategies as st
import numpy as np

from taskreduce.complexity import (
    ComplexityResult,
    check_monotonicity,
    consistency_check,
    exact_relative_complexity,
    recompute,
)
from taskreduce.envs import toy
from taskreduce.envs.gridworld import GridWorldParams, admissible_family, make_gridworld, rotation_decoder, rotation_encoder
from taskreduce.errors import ComplexityUndefinedError, ConfigurationError, PreconditionError
from taskreduce.props import random_task
from taskreduce.reduction import FunctionSpace, check_reduction
from taskreduce.taskcore import Policy, enumerate_admissible, policy_table


def identity_spaces(tau1, tau2):
    return FunctionSpace.identity(tau1.observations, "encoder"), FunctionSpace.identity(tau2.actions, "decoder")


class TestExact:
    def test_oracle_pair(self):
        tau1, tau2 = toy.oracle_pair()
        res = exact_relative_complexity(tau1, tau2, *identity_spaces(tau1, tau2), enumerate_admissible(tau2))
        assert res.value == pytest.approx(0.5)
        assert res.method == "exact"
        assert policy_table(res.attaining_policy) == (0, 1)
        assert res.metadata["policy_index"] == 1 and res.metadata["quantified"] == 2

    def test_opposite_action_is_maximal(self):
        tau1 = toy.one_shot("only-1", [[0.0, 1.0]])
        tau2 = toy.one_shot("only-0", [[1.0, 0.0]])
        res = exact_relative_complexity(tau1, tau2, *identity_spaces(tau1, tau2), enumerate_admissible(tau2))
        assert res.value == 1.0

    @pytest.mark.parametrize("case", toy.nested_cases(), ids=lambda c: c.name)
    def test_nested_chain_values(self, case):
        report = check_monotonicity(case.tau1, case.tau2, case.chain, case.admissible2())
        assert report.monotone
        assert report.values == pytest.approx(case.expected, abs=1e-12)

    def test_rotated_grid_world_is_zero(self):
        north = make_gridworld(GridWorldParams(n=2, m=1))
        east = make_gridworld(GridWorldParams(n=2, m=1, goal_dir="E"))
        res = exact_relative_complexity(east, north, FunctionSpace.of([rotation_encoder(1)]),
                                        FunctionSpace.of([rotation_decoder(1)]), admissible_family(north, 16, 0))
        assert res.value == 0.0

    def test_digest_is_stable(self):
        tau1, tau2 = toy.oracle_pair()
        a = exact_relative_complexity(tau1, tau2, *identity_spaces(tau1, tau2), enumerate_admissible(tau2))
        b = exact_relative_complexity(tau1, tau2, *identity_spaces(tau1, tau2), enumerate_admissible(tau2))
        assert a.config_digest == b.config_digest and len(a.config_digest) == 16


class TestPreconditions:
    def test_empty_admissible_set(self):
        tau1, tau2 = toy.oracle_pair()
        with pytest.raises(ComplexityUndefinedError, match="C undefined"):
            exact_relative_complexity(tau1, tau2, *identity_spaces(tau1, tau2), [])

    def test_non_admissible_member(self):
        tau1, tau2 = toy.oracle_pair()
        bad = [Policy.tabular([1, 0], tau2.observations, tau2.actions)]
        with pytest.raises(PreconditionError, match="not admissible") as exact_err:
            exact_relative_complexity(tau1, tau2, *identity_spaces(tau1, tau2), bad)
        with pytest.raises(PreconditionError) as reduction_err:
            check_reduction(tau1, tau2, *identity_spaces(tau1, tau2), bad)
        assert str(exact_err.value) == str(reduction_err.value)
        assert "R*" in str(exact_err.value)

    def test_chain_must_be_nested(self):
        case = toy.nested_cases()[0]
        with pytest.raises(ConfigurationError, match="space chain is not nested"):
            check_monotonicity(case.tau1, case.tau2, tuple(reversed(case.chain)), case.admissible2())

    def test_result_range_checked(self):
        with pytest.raises(ConfigurationError, match="outside"):
            ComplexityResult(value=1.5, method="exact", attaining_policy=None, attaining_pair=None)
        with pytest.raises(ConfigurationError, match="method"):
            ComplexityResult(value=0.5, method="guess", attaining_policy=None, attaining_pair=None)


class TestConsistency:
    def test_recompute_matches(self):
        tau1, tau2 = toy.oracle_pair()
        res = exact_relative_complexity(tau1, tau2, *identity_spaces(tau1, tau2), enumerate_admissible(tau2))
        assert recompute(tau1, res) == pytest.approx(res.value)

    def test_reduction_iff_zero(self):
        case = toy.nested_cases()[0]
        for H, G in case.chain:
            rep = consistency_check(case.tau1, case.tau2, H, G, case.admissible2())
            assert rep.consistent
            assert rep.holds == (rep.value == 0.0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_pairs(self, seed):
        rng = np.random.default_rng(seed)
        t2 = random_task(rng, slack=float(rng.uniform(0.5, 1.0)), name="t2")
        t1 = random_task(rng, slack=float(rng.uniform(0.5, 1.0)), name="t1")
        adm = enumerate_admissible(t2)
        if not adm:
            return
        H = FunctionSpace.all_functions(t1.observations, t2.observations, "encoder")
        G = FunctionSpace.identity(t2.actions, "decoder")
        rep = consistency_check(t1, t2, H, G, adm)
        assert rep.consistent, rep.to_dict()
        assert 0.0 <= rep.value <= 1.0


def test_result_serializes_attaining_triple():
    tau1, tau2 = toy.oracle_pair()
    d = exact_relative_complexity(tau1, tau2, *identity_spaces(tau1, tau2), enumerate_admissible(tau2)).to_dict()
    assert d["value"] == 0.5
    assert d["attaining_policy"]["table"] == [0, 1]
    assert len(d["attaining_pair"]) == 2
