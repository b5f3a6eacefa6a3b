import math

import numpy as np
import pytest

from taskreduce.diffnet import initialize, max_relative_error, numeric_gradient
from taskreduce.envs import toy
from taskreduce.errors import ConfigurationError, TrainingError
from taskreduce.learners import (
    ArchSpec,
    Collector,
    ContinuousAgent,
    ContinuousCritic,
    ConvergenceMonitor,
    DiscreteAgent,
    DiscreteCritic,
    ReplayBuffer,
    TrainableTransform,
    epsilon_at,
    q_learning_loss,
    q_learning_loss_grad,
    softmax,
)
from taskreduce.reduction import Decoder, Encoder
from taskreduce.taskcore import BoxSpace, FiniteSpace, policy_table


def perturbed(t: TrainableTransform, rng) -> TrainableTransform:
    t.net = t.net.with_params(rng.normal(scale=0.5, size=t.net.param_count))
    return t


class TestArchSpec:
    def test_dims(self):
        assert ArchSpec(depth=2, width=8).dims(3, 2) == (3, 8, 8, 2)
        assert ArchSpec(depth=0).dims(3, 2) == (3, 2)

    def test_identity_only(self):
        arch = ArchSpec(depth=None)
        assert arch.is_identity and arch.label == "identity"
        with pytest.raises(ConfigurationError, match="no layers"):
            arch.dims(1, 1)

    def test_validation(self):
        with pytest.raises(ConfigurationError, match="depth must be >= 0"):
            ArchSpec(depth=-1)
        with pytest.raises(ConfigurationError, match="activation"):
            ArchSpec(activation="gelu")


class TestReplayBuffer:
    def test_ring_overwrites_oldest(self):
        buf = ReplayBuffer(3, obs_dim=1)
        for i in range(5):
            buf.add(i, [float(i)], i % 2, float(i), [float(i + 1)], False)
        assert len(buf) == 3
        assert sorted(buf.rewards.tolist()) == [2.0, 3.0, 4.0]

    def test_sample_shapes(self):
        buf = ReplayBuffer(10, obs_dim=2, action_shape=(1,))
        buf.add(None, [0.0, 1.0], [0.5], 1.0, [1.0, 0.0], True)
        batch = buf.sample(np.random.default_rng(0), 4)
        assert batch.obs.shape == (4, 2) and batch.actions.shape == (4, 1)
        assert batch.dones.tolist() == [1.0] * 4

    def test_empty_sample(self):
        with pytest.raises(TrainingError, match="empty replay buffer"):
            ReplayBuffer(4, obs_dim=1).sample(np.random.default_rng(0), 2)

    def test_collector_respects_horizon(self):
        task = toy.unit_chain(3, success_threshold=3.0)
        buf = ReplayBuffer(16, obs_dim=1)
        col = Collector(task, buf, np.random.default_rng(0))
        ends = [col.step(lambda o: 0) for _ in range(6)]
        assert ends == [False, False, True, False, False, True]
        assert col.returns == [3.0, 3.0] and len(buf) == 6


class TestLosses:
    def test_softmax_rows(self):
        p = softmax(np.array([[0.0, 0.0], [1000.0, 0.0]]))
        np.testing.assert_allclose(p.sum(axis=1), [1.0, 1.0])
        assert p[1, 0] == pytest.approx(1.0)

    def test_uniform_logits(self):
        assert q_learning_loss([0], np.zeros((1, 2)), [1.0]) == pytest.approx(math.log(2.0))

    def test_gradient(self):
        rng = np.random.default_rng(1)
        actions, q = rng.integers(3, size=5), rng.uniform(0, 2, size=5)
        logits = rng.standard_normal((5, 3))
        _, analytic = q_learning_loss_grad(actions, logits, q)
        numeric = numeric_gradient(lambda z: q_learning_loss(actions, z.reshape(5, 3), q), logits.ravel())
        assert max_relative_error(analytic.ravel(), numeric) < 1e-5


class TestSchedules:
    def test_epsilon_linear_then_flat(self):
        assert epsilon_at(0, 300) == 1.0
        assert epsilon_at(50, 300) == pytest.approx(1.0 - 0.95 / 2)
        assert epsilon_at(100, 300) == pytest.approx(0.05)
        assert epsilon_at(299, 300) == pytest.approx(0.05)

    def test_convergence_needs_two_windows(self):
        mon = ConvergenceMonitor(window=3, tol=0.01)
        for _ in range(5):
            mon.add(1.0, 2.0)
        assert not mon.converged
        mon.add(1.0, 2.0)
        assert mon.converged

    def test_drift_is_not_convergence(self):
        mon = ConvergenceMonitor(window=2, tol=0.01)
        for v in (1.0, 1.0, 2.0, 2.0):
            mon.add(v, 1.0)
        assert not mon.converged


class TestDiscreteChain:
    @pytest.fixture
    def agent(self):
        rng = np.random.default_rng(7)
        O, A = FiniteSpace(3), FiniteSpace(2)
        enc = perturbed(TrainableTransform.build(Encoder, ArchSpec(1, 4), O, O, rng), rng)
        dec = perturbed(TrainableTransform.build(Decoder, ArchSpec(1, 4), A, A, rng), rng)
        pi = initialize((3, 5, 2), rng=rng)
        return DiscreteAgent(pi, O, A, enc, dec)

    def test_residual_transforms_start_as_identity(self):
        rng = np.random.default_rng(0)
        O = FiniteSpace(3)
        t = TrainableTransform.build(Encoder, ArchSpec(1, 4), O, O, rng)
        assert t.residual and t.frozen().extension() == (0, 1, 2)

    def test_probabilities_are_distributions(self, agent):
        P = agent.probs1(np.eye(3))
        np.testing.assert_allclose(P.sum(axis=1), np.ones(3))

    @pytest.mark.parametrize("part", ["pi", "h", "g"])
    def test_chain_gradients(self, agent, part):
        X, actions, q = np.eye(3), np.array([0, 1, 1]), np.array([1.0, 0.5, 2.0])
        _, grads = agent.loss1(X, actions, q)
        nets = {"pi": agent.pi, "h": agent.encoder.net, "g": agent.decoder.net}

        def loss(p):
            saved = nets[part]
            new = saved.with_params(p)
            if part == "pi":
                agent.pi = new
            elif part == "h":
                agent.encoder.net = new
            else:
                agent.decoder.net = new
            try:
                return agent.loss1(X, actions, q)[0]
            finally:
                if part == "pi":
                    agent.pi = saved
                elif part == "h":
                    agent.encoder.net = saved
                else:
                    agent.decoder.net = saved

        numeric = numeric_gradient(loss, nets[part].params)
        assert max_relative_error(grads[part], numeric) < 1e-4

    def test_untrained_chain_acts_like_the_inner_policy(self):
        rng = np.random.default_rng(1)
        O, A = FiniteSpace(3), FiniteSpace(2)
        enc = TrainableTransform.build(Encoder, ArchSpec(1, 4), O, O, rng)
        dec = TrainableTransform.build(Decoder, ArchSpec(1, 4), A, A, rng)
        agent = DiscreteAgent(initialize((3, 5, 2), rng=rng), O, A, enc, dec)
        expected = tuple(int(a) for a in np.argmax(agent.pi.forward(np.eye(3)), axis=1))
        assert policy_table(agent.composed()) == expected


class TestCritics:
    def test_discrete_critic_learns_constant_reward(self):
        rng = np.random.default_rng(0)
        buf = ReplayBuffer(8, obs_dim=1)
        for _ in range(8):
            buf.add(None, [1.0], 0, 1.0, [1.0], True)
        critic = DiscreteCritic("q", initialize((1, 8, 2), rng=rng), lr=0.01, gamma=0.9)
        for _ in range(500):
            critic.td_update(buf.sample(rng, 8), np.array([[1.0, 0.0]] * 8))
        assert critic.q(np.array([[1.0]]), np.array([0]))[0] == pytest.approx(1.0, abs=0.05)

    def test_divergence_raises(self):
        rng = np.random.default_rng(0)
        buf = ReplayBuffer(2, obs_dim=1)
        buf.add(None, [1.0], 0, 1e6, [1.0], True)
        critic = DiscreteCritic("q", initialize((1, 2), rng=rng), lr=0.01, gamma=0.9, loss_limit=10.0)
        with pytest.raises(TrainingError, match="critic q diverged") as info:
            critic.td_update(buf.sample(rng, 2), np.ones((2, 2)) / 2)
        assert info.value.diagnostics["limit"] == 10.0

    def test_continuous_actor_gradient(self):
        rng = np.random.default_rng(2)
        box = BoxSpace((-1.0,), (1.0,))
        critic = ContinuousCritic("q", initialize((3, 6, 1), rng=rng), obs_dim=2, lr=0.01, gamma=0.9)
        agent = ContinuousAgent(initialize((2, 4, 1), rng=rng), np.array([-1.0]), BoxSpace.symmetric((1.0, 1.0)), box)
        X, eps = rng.standard_normal((5, 2)), rng.standard_normal((5, 1))
        _, gp, _ = agent.grad2(X, eps, critic)

        def mean_q(p):
            saved, agent.pi = agent.pi, agent.pi.with_params(p)
            try:
                return float(critic.q(X, agent._actor_forward(X, eps)[0]).mean())
            finally:
                agent.pi = saved

        assert max_relative_error(gp, numeric_gradient(mean_q, agent.pi.params)) < 1e-4

    def test_continuous_samples_stay_in_box(self):
        rng = np.random.default_rng(3)
        box = BoxSpace((-2.0,), (2.0,))
        agent = ContinuousAgent(initialize((1, 4, 1), rng=rng), np.array([1.0]), BoxSpace.symmetric((5.0,)), box)
        a = agent.sample2(rng.standard_normal((100, 1)) * 5, rng)
        assert np.all(np.abs(a) <= 2.0)
