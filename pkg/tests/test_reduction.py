import re

import numpy as np
import pytest

from taskreduce.envs import toy
from taskreduce.envs.gridworld import (
    GridWorldParams,
    admissible_family,
    make_gridworld,
    rot90_obs,
    rotate_ccw,
    rotation_decoder,
    rotation_encoder,
    rotation_family,
)
from taskreduce.errors import ConfigurationError, PreconditionError, UnsupportedOperationError
from taskreduce.learners import ArchSpec
from taskreduce.reduction import (
    Decoder,
    Encoder,
    FunctionSpace,
    SpaceFamily,
    check_equivalence,
    check_reduction,
    closed_form_names,
    compose,
    partial_order_audit,
    register_closed_form,
    verify_space_axioms,
)
from taskreduce.taskcore import FiniteSpace, Policy, enumerate_admissible, exact_return, policy_table

ERROR_HYPOTHESES = re.escape("space hypotheses fail")


def random_encoder(rng, n=4) -> Encoder:
    sp = FiniteSpace(n)
    return Encoder.tabular(rng.integers(n, size=n), sp, sp)


@pytest.fixture(scope="module")
def east_north():
    params = GridWorldParams(n=2, m=1)
    return make_gridworld(GridWorldParams(n=2, m=1, goal_dir="E")), make_gridworld(params)


class TestTransforms:
    def test_identity_compose(self):
        task = toy.coin_flip()
        pi = Policy.tabular([1, 0], task.observations, task.actions)
        h = FunctionSpace.identity(task.observations, "encoder")[0]
        g = FunctionSpace.identity(task.actions, "decoder")[0]
        assert policy_table(compose(g, pi, h)) == (1, 0)

    def test_composition_is_associative(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a, b, c = (random_encoder(rng) for _ in range(3))
            assert a.then(b).then(c).extension() == a.then(b.then(c)).extension()

    def test_then_applies_left_first(self):
        sp = FiniteSpace(3)
        shift = Encoder.tabular([1, 2, 0], sp, sp)
        const = Encoder.tabular([0, 0, 2], sp, sp)
        assert shift.then(const).extension() == (0, 2, 0)

    def test_unbound_transform_cannot_compose(self):
        task = toy.coin_flip()
        pi = Policy.tabular([0, 0], task.observations, task.actions)
        with pytest.raises(ConfigurationError, match="must be bound"):
            compose(Decoder.identity(), pi, Encoder.identity(task.observations))

    def test_tabular_entries_checked(self):
        sp = FiniteSpace(2)
        with pytest.raises(ConfigurationError, match="valid codomain indices"):
            Encoder.tabular([0, 2], sp, sp)

    def test_dict_round_trip(self):
        sp = FiniteSpace(3)
        t = Decoder.tabular([2, 0, 1], sp, sp)
        back = Decoder.from_dict(t.to_dict())
        assert back.table == t.table and back.role == "decoder"
        cf = Decoder.from_dict(rotation_decoder(2).to_dict())
        assert cf.name == "rot_action_mod4" and cf.params == {"k": 2}

    def test_neural_transform_dims_checked(self):
        net = ArchSpec(depth=1, width=4).build(3, 2, np.random.default_rng(0))
        with pytest.raises(ConfigurationError, match="do not fit"):
            Encoder.neural(net, FiniteSpace(2), FiniteSpace(2))


class TestClosedForms:
    def test_registry_names(self):
        names = closed_form_names()
        for n in ("identity", "rot90_obs", "rot_action_mod4"):
            assert n in names

    def test_unknown_name(self):
        with pytest.raises(ConfigurationError, match="unknown closed-form transform 'flip'"):
            Encoder.closed_form("flip")

    def test_reregistering_a_name(self):
        with pytest.raises(ConfigurationError, match="already registered"):
            register_closed_form("identity")(lambda v: v)

    def test_quarter_turns(self):
        assert rotate_ccw((3, 5), 1) == (-5, 3)
        # three counter-clockwise turns are one clockwise turn: (x, y) -> (y, -x)
        assert rotate_ccw((3, 5), 3) == (5, -3)
        assert rotate_ccw((3, 5), 4) == (3, 5)

    def test_clockwise_map_is_three_quarter_turns(self):
        # (x, y) -> (y, -x) is the clockwise turn; rotation_encoder(1) is its inverse
        label = ((3, 5), (0, 0), (2, 1))
        assert rotation_encoder(3)(label) == ((5, -3), (0, 0), (1, -2))
        assert rotation_encoder(1)(label) == ((-5, 3), (0, 0), (-1, 2))
        assert rotation_encoder(1)(rotation_encoder(3)(label)) == label

    def test_map_rotation_keeps_label_order(self):
        label = ((1, 0), (0, 1), (0, 2), (1, 1))
        assert rot90_obs(label, k=1) == ((-1, 0), (0, 1), (-2, 0), (-1, 1))

    def test_action_shift(self):
        dec = rotation_decoder(1).bind(FiniteSpace(4), FiniteSpace(4))
        assert dec.extension() == (1, 2, 3, 0)


class TestFunctionSpace:
    def test_rejects_extensional_duplicates(self):
        sp = FiniteSpace(2)
        with pytest.raises(ConfigurationError, match="extensionally equal"):
            FunctionSpace.of([Encoder.tabular([0, 1], sp, sp), Encoder.identity(sp)])

    def test_rejects_empty_explicit_space(self):
        with pytest.raises(ConfigurationError, match="at least one member"):
            FunctionSpace(())

    def test_all_functions(self):
        sp = FiniteSpace(2)
        H = FunctionSpace.all_functions(sp, sp)
        assert len(H) == 4 and H.has_identity()

    def test_bind_drops_partial_members(self):
        task = make_gridworld(GridWorldParams(n=1))
        H = FunctionSpace.of([rotation_encoder(0), rotation_encoder(1)])
        bound = H.bind(task.observations, task.observations, skip_partial=True)
        # a quarter turn moves the N goal off the N task's map
        assert len(bound) == 1 and bound.has_identity()


class TestCheckReduction:
    def test_identity_self_reduction(self):
        task = toy.one_shot("both", [[1.0, 1.0]])
        adm = enumerate_admissible(task)
        v = check_reduction(task, task, FunctionSpace.identity(task.observations, "encoder"),
                            FunctionSpace.identity(task.actions, "decoder"), adm)
        assert v.holds and v.quantified == 2
        assert [w.policy_index for w in v.witnesses] == [0, 1]

    def test_counterexample(self):
        tau1 = toy.one_shot("only-1", [[0.0, 1.0]])
        tau2 = toy.one_shot("only-0", [[1.0, 0.0]])
        adm = enumerate_admissible(tau2)
        v = check_reduction(tau1, tau2, FunctionSpace.identity(tau1.observations, "encoder"),
                            FunctionSpace.identity(tau2.actions, "decoder"), adm)
        assert not v.holds
        assert v.counterexample_index == 0
        assert policy_table(v.counterexample) == (0,)
        assert v.to_dict()["counterexample"] == [0]

    def test_richer_decoders_restore_the_reduction(self):
        tau1 = toy.one_shot("only-1", [[0.0, 1.0]])
        tau2 = toy.one_shot("only-0", [[1.0, 0.0]])
        G = FunctionSpace.all_functions(tau2.actions, tau1.actions, "decoder")
        v = check_reduction(tau1, tau2, FunctionSpace.identity(tau1.observations, "encoder"), G,
                            enumerate_admissible(tau2))
        assert v.holds
        _, g = v.pair(v.witnesses[0])
        assert g(0) == 1

    def test_rotated_grid_world(self, east_north):
        east, north = east_north
        adm = admissible_family(north, 128, 0)
        assert len(adm) >= 50
        H = FunctionSpace.of([rotation_encoder(1)])
        G = FunctionSpace.of([rotation_decoder(1)])
        v = check_reduction(east, north, H, G, adm)
        assert v.holds and len(v.witnesses) == len(adm)
        for w in v.witnesses[:10]:
            h, g = v.pair(w)
            assert exact_return(east, compose(g, adm[w.policy_index], h)) == pytest.approx(1.0, abs=1e-10)

    def test_wrong_rotation_fails(self, east_north):
        east, north = east_north
        v = check_reduction(east, north, FunctionSpace.of([rotation_encoder(1)]),
                            FunctionSpace.of([rotation_decoder(3)]), admissible_family(north, 8, 0))
        assert not v.holds

    def test_non_admissible_family_member(self):
        _, tau2 = toy.oracle_pair()
        bad = [Policy.tabular([1, 1], tau2.observations, tau2.actions)]
        with pytest.raises(PreconditionError, match="not admissible"):
            check_reduction(tau2, tau2, FunctionSpace.identity(tau2.observations),
                            FunctionSpace.identity(tau2.actions, "decoder"), bad)

    def test_empty_family(self):
        _, tau2 = toy.oracle_pair()
        with pytest.raises(PreconditionError, match="is empty"):
            check_reduction(tau2, tau2, FunctionSpace.identity(tau2.observations),
                            FunctionSpace.identity(tau2.actions, "decoder"), [])

    def test_parametric_spaces_refused(self):
        tau1, tau2 = toy.oracle_pair()
        H = FunctionSpace.parametric(ArchSpec(depth=1), tau1.observations, tau2.observations)
        with pytest.raises(UnsupportedOperationError, match="parametric"):
            check_reduction(tau1, tau2, H, FunctionSpace.identity(tau2.actions, "decoder"),
                            enumerate_admissible(tau2))


def test_equivalence():
    family, adm = toy.cyclic_family()
    a, b = family.tasks[0], family.tasks[1]
    H, G = family.spaces_for(0, 1)
    assert check_equivalence(a, b, H, G, H, G, adm[0], adm[1])
    only1 = toy.one_shot("only-1", [[0.0, 1.0]])
    only0 = toy.one_shot("only-0", [[1.0, 0.0]])
    Hi, Gi = FunctionSpace.identity(only1.observations), FunctionSpace.identity(only1.actions, "decoder")
    assert not check_equivalence(only1, only0, Hi, Gi, Hi, Gi,
                                 enumerate_admissible(only1), enumerate_admissible(only0))


class TestAxioms:
    def test_rotation_spaces_are_closed(self):
        report = verify_space_axioms(rotation_family(GridWorldParams(n=1)))
        assert report.order_applicable
        assert report.checked_compositions > 0

    def test_missing_identity(self):
        task = toy.one_shot("both", [[1.0, 1.0], [1.0, 1.0]])
        O = task.observations
        swap_only = FunctionSpace.of([Encoder.tabular([1, 0], O, O)])
        family = SpaceFamily((task,), {(0, 0): swap_only},
                             {(0, 0): FunctionSpace.identity(task.actions, "decoder")})
        report = verify_space_axioms(family)
        assert report.missing_identity == ["H[0,0]"]
        with pytest.raises(PreconditionError, match=ERROR_HYPOTHESES):
            partial_order_audit(family, {0: enumerate_admissible(task)})

    def test_closure_failure(self):
        task = toy.one_shot("three", np.ones((3, 2)))
        O = task.observations
        H = FunctionSpace.of([Encoder.identity(O), Encoder.tabular([1, 2, 0], O, O)])
        family = SpaceFamily((task,), {(0, 0): H}, {(0, 0): FunctionSpace.identity(task.actions, "decoder")})
        report = verify_space_axioms(family)
        assert not report.missing_identity
        assert [f.kind for f in report.closure_failures] == ["H"]
        assert not report.order_applicable


class TestAudit:
    def test_single_task(self):
        task = toy.one_shot("both", [[1.0, 1.0]])
        report = partial_order_audit(SpaceFamily.identity([task]), {0: enumerate_admissible(task)})
        assert report.passed
        assert report.reduces == ((True,),)
        assert not report.strict(0, 0)
        assert report.check("strict_irreflexivity").passed

    def test_cyclic_tasks_all_equivalent(self):
        family, adm = toy.cyclic_family()
        report = partial_order_audit(family, adm)
        assert report.passed
        assert all(report.equivalent(i, j) for i in range(3) for j in range(3))
        d = report.to_dict()
        assert d["tasks"] == ["cyclic-0", "cyclic-1", "cyclic-2"]
        assert set(d["checks"]) >= {"reflexivity", "antisymmetry", "transitivity"}

    def test_strict_pair(self):
        # anything admissible for "both" uses either action; "only-0" needs action 0
        only0 = toy.one_shot("only-0", [[1.0, 0.0]])
        both = toy.one_shot("both", [[1.0, 1.0]])
        family = SpaceFamily.identity([only0, both])
        adm = {0: enumerate_admissible(only0), 1: enumerate_admissible(both)}
        report = partial_order_audit(family, adm)
        assert report.passed
        assert report.reduces == ((True, False), (True, True))
        assert report.strict(1, 0) and not report.equivalent(0, 1)
