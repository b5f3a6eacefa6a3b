"""
Adversarial estimation of relative complexity.

The inner policy pi2 is trained to solve task 2 while making the composed policy
g . pi2 . h fail on task 1 (weight alpha); the encoder h and decoder g are
trained to make the composed policy succeed on task 1. The estimate is

    C~ = 1 - R1(g . pi2 . h) / R1*

evaluated with the greedy (mean-action) policies once training stops. This is a
best-response approximation of the sup-inf, not the sup-inf itself.

Finite action spaces use the Q-weighted log-likelihood loss with learnt critics;
box action spaces use the actor-critic variant that ascends critic values.
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Iterable, NamedTuple, Sequence

import numpy as np

from . import _validate
from .complexity import ComplexityResult
from .diffnet import Adam
from .errors import ConfigurationError
from .learners import (
    LOG_STD_BOUNDS,
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
)
from .reduction import ComposedPolicy, Decoder, Encoder
from .taskcore import (
    BoxSpace,
    FiniteSpace,
    Policy,
    ReturnEstimate,
    Sampled,
    TaskSpec,
    canonical_json,
    estimate_return,
    is_admissible,
)

logger = logging.getLogger(__name__)

DEFAULT_CRITIC = ArchSpec(depth=2, width=64)


# W5-BEGIN:config
@dataclass(frozen=True)
class EstimatorConfig:
    alpha: float = 1.0
    lr_policy: float = 1e-3
    lr_enc_dec: float = 1e-3
    lr_critic: float = 1e-3
    batch_size: int | None = None
    max_iters: int | None = None
    eval_rollouts: int = 20
    admissibility_tolerance: float = 0.05
    gamma: float = 0.99
    replay_capacity: int = 100_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_fraction: float = 1.0 / 3.0
    entropy_weight: float = 0.01
    init_log_std: float = -0.5
    steps_per_iter: int = 10
    critic_steps: int = 1
    target_every: int = 100
    eval_every: int = 10
    train_eval_rollouts: int = 5
    convergence_window: int = 50
    convergence_tol: float = 0.01
    critic_loss_limit: float = 1e6
    advantage: bool = False
    seed: int = 0

    def __post_init__(self):
        _validate.nonneg_real("alpha", self.alpha)
        for name in ("lr_policy", "lr_enc_dec", "lr_critic", "critic_loss_limit"):
            _validate.positive_real(name, getattr(self, name))
        for name in ("eval_rollouts", "replay_capacity", "steps_per_iter", "critic_steps", "target_every",
                     "eval_every", "train_eval_rollouts", "convergence_window"):
            _validate.positive_int(name, getattr(self, name))
        for name in ("batch_size", "max_iters"):
            if getattr(self, name) is not None:
                _validate.positive_int(name, getattr(self, name))
        _validate.nonneg_real("admissibility_tolerance", self.admissibility_tolerance)
        _validate.nonneg_real("entropy_weight", self.entropy_weight)
        _validate.nonneg_real("convergence_tol", self.convergence_tol)
        _validate.finite_real("init_log_std", self.init_log_std)
        g = _validate.finite_real("gamma", self.gamma)
        if not 0.0 < g <= 1.0:
            raise ConfigurationError("gamma must be in (0, 1]")
        for name in ("eps_start", "eps_end", "eps_fraction"):
            v = _validate.finite_real(name, getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1]")
        _validate.nonneg_int("seed", self.seed)
        if self.batch_size is not None and self.batch_size > self.replay_capacity:
            raise ConfigurationError("batch_size must be <= replay_capacity")

    def resolved(self, discrete: bool) -> "EstimatorConfig":
        """Fill batch size and iteration cap with the per-variant defaults."""
        cfg = replace(
            self,
            batch_size=self.batch_size or (1000 if discrete else 200),
            max_iters=self.max_iters or (1000 if discrete else 50_000),
        )
        if cfg.batch_size > cfg.replay_capacity:
            raise ConfigurationError("batch_size must be <= replay_capacity")
        return cfg

    def with_(self, **changes) -> "EstimatorConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()[:16]
# W5-END:config


class CurvePoint(NamedTuple):
    iter: int
    R2: float
    R1: float
    c1: float
    c2: float


class _Rngs:
    """Independent generators per concern, all derived from one seed."""

    NAMES = ("pi", "h", "g", "q1", "q2", "collect1", "collect2", "sample", "explore", "eval")

    def __init__(self, seed: int):
        for name, ss in zip(self.NAMES, np.random.SeedSequence(int(seed)).spawn(len(self.NAMES))):
            setattr(self, name, np.random.default_rng(ss))
        self.eval_base = int(self.eval.integers(0, 2**31 - 1))


def _check_kinds(tau1: TaskSpec | None, tau2: TaskSpec, kind: type) -> None:
    for t in (tau1, tau2):
        if t is not None and not isinstance(t.actions, kind):
            raise ConfigurationError(
                f"task {t.name!r} has {type(t.actions).__name__} actions; this estimator needs {kind.__name__}")


# W5-BEGIN:discrete
class _DiscreteRun:
    """One Q-learning-loss training run; task 1 may be absent for individual training."""

    def __init__(self, tau1, tau2, h_arch, g_arch, pi_arch, critic_arch, cfg: EstimatorConfig):
        _check_kinds(tau1, tau2, FiniteSpace)
        self.tau1, self.tau2, self.cfg = tau1, tau2, cfg
        self.rng = _Rngs(cfg.seed)
        r = self.rng
        pi = pi_arch.build(tau2.observations.feature_dim, tau2.actions.size, r.pi)
        enc = dec = None
        if tau1 is not None:
            enc = TrainableTransform.build(Encoder, h_arch, tau1.observations, tau2.observations, r.h)
            dec = TrainableTransform.build(Decoder, g_arch, tau2.actions, tau1.actions, r.g)
        self.agent = DiscreteAgent(pi, tau2.observations, tau2.actions, enc, dec)
        self.q2 = DiscreteCritic("Q2", critic_arch.build(tau2.observations.feature_dim, tau2.actions.size, r.q2),
                                 cfg.lr_critic, cfg.gamma, cfg.target_every, cfg.critic_loss_limit)
        self.buf2 = ReplayBuffer(cfg.replay_capacity, tau2.observations.feature_dim)
        self.col2 = Collector(tau2, self.buf2, r.collect2)
        self.opt_pi = Adam(cfg.lr_policy)
        if tau1 is not None:
            self.q1 = DiscreteCritic("Q1", critic_arch.build(tau1.observations.feature_dim, tau1.actions.size, r.q1),
                                     cfg.lr_critic, cfg.gamma, cfg.target_every, cfg.critic_loss_limit)
            self.buf1 = ReplayBuffer(cfg.replay_capacity, tau1.observations.feature_dim)
            self.col1 = Collector(tau1, self.buf1, r.collect1)
            self.opt_h = Adam(cfg.lr_enc_dec) if enc.trainable else None
            self.opt_g = Adam(cfg.lr_enc_dec) if dec.trainable else None

    def _explorer(self, policy, n_actions: int, eps: float):
        rng = self.rng.explore

        def choose(o):
            if rng.random() < eps:
                return int(rng.integers(n_actions))
            return policy.act(o)
        return choose

    def _weights(self, critic: DiscreteCritic, probs: np.ndarray, batch) -> np.ndarray:
        Q = critic.q_all(batch.obs)
        q = Q[np.arange(len(batch.actions)), batch.actions]
        if self.cfg.advantage:
            q = q - (probs * Q).sum(axis=1)
        return q

    def iterate(self, it: int) -> tuple[float, float]:
        cfg, a, r = self.cfg, self.agent, self.rng
        eps = epsilon_at(it, cfg.max_iters, cfg.eps_start, cfg.eps_end, cfg.eps_fraction)
        act2 = self._explorer(a.policy2(), self.tau2.actions.size, eps)
        act1 = self._explorer(a.composed(), self.tau1.actions.size, eps) if self.tau1 is not None else None
        for _ in range(cfg.steps_per_iter):
            self.col2.step(act2)
            if act1 is not None:
                self.col1.step(act1)
        B = cfg.batch_size
        # step 0: critics
        for _ in range(cfg.critic_steps):
            b2 = self.buf2.sample(r.sample, B)
            self.q2.td_update(b2, a.probs2(b2.next_obs))
            if self.tau1 is not None:
                b1 = self.buf1.sample(r.sample, B)
                self.q1.td_update(b1, a.probs1(b1.next_obs))
        # step 1: pi2 descends L2 - alpha * L1
        b2 = self.buf2.sample(r.sample, B)
        L2, g2 = a.loss2(b2.obs, b2.actions, self._weights(self.q2, a.probs2(b2.obs), b2))
        if self.tau1 is None:
            a.pi = a.pi.with_params(self.opt_pi.step(a.pi.params, g2))
            return L2, 0.0
        b1 = self.buf1.sample(r.sample, B)
        L1, g1 = a.loss1(b1.obs, b1.actions, self._weights(self.q1, a.probs1(b1.obs), b1))
        a.pi = a.pi.with_params(self.opt_pi.step(a.pi.params, g2 - cfg.alpha * g1["pi"]))
        c1 = L2 - cfg.alpha * L1
        # step 2: [h, g] descend L1 against the updated pi2
        c2, g1 = a.loss1(b1.obs, b1.actions, self._weights(self.q1, a.probs1(b1.obs), b1))
        if self.opt_h is not None:
            a.encoder.step(self.opt_h, g1["h"])
        if self.opt_g is not None:
            a.decoder.step(self.opt_g, g1["g"])
        return c1, c2

    def policy2(self) -> Policy:
        return self.agent.policy2()

    def composed(self) -> ComposedPolicy:
        return self.agent.composed()
# W5-END:discrete


# W5-BEGIN:continuous
class _ContinuousRun:
    """One actor-critic training run ascending critic values; task 1 optional."""

    def __init__(self, tau1, tau2, h_arch, g_arch, pi_arch, critic_arch, cfg: EstimatorConfig):
        _check_kinds(tau1, tau2, BoxSpace)
        self.tau1, self.tau2, self.cfg = tau1, tau2, cfg
        self.rng = _Rngs(cfg.seed)
        r = self.rng
        d_o2, d_a2 = tau2.observations.feature_dim, tau2.actions.dims
        pi = pi_arch.build(d_o2, d_a2, r.pi)
        enc = dec = None
        if tau1 is not None:
            enc = TrainableTransform.build(Encoder, h_arch, tau1.observations, tau2.observations, r.h)
            dec = TrainableTransform.build(Decoder, g_arch, tau2.actions, tau1.actions, r.g)
        self.agent = ContinuousAgent(pi, np.full(d_a2, cfg.init_log_std), tau2.observations, tau2.actions, enc, dec)
        self.q2 = ContinuousCritic("Q2", critic_arch.build(d_o2 + d_a2, 1, r.q2), d_o2, cfg.lr_critic, cfg.gamma,
                                   cfg.target_every, cfg.critic_loss_limit)
        self.buf2 = ReplayBuffer(cfg.replay_capacity, d_o2, (d_a2,))
        self.col2 = Collector(tau2, self.buf2, r.collect2)
        self.opt_pi = Adam(cfg.lr_policy)
        self.opt_log_std = Adam(cfg.lr_policy)
        if tau1 is not None:
            d_o1, d_a1 = tau1.observations.feature_dim, tau1.actions.dims
            self.q1 = ContinuousCritic("Q1", critic_arch.build(d_o1 + d_a1, 1, r.q1), d_o1, cfg.lr_critic,
                                       cfg.gamma, cfg.target_every, cfg.critic_loss_limit)
            self.buf1 = ReplayBuffer(cfg.replay_capacity, d_o1, (d_a1,))
            self.col1 = Collector(tau1, self.buf1, r.collect1)
            self.opt_h = Adam(cfg.lr_enc_dec) if enc.trainable else None
            self.opt_g = Adam(cfg.lr_enc_dec) if dec.trainable else None

    def iterate(self, it: int) -> tuple[float, float]:
        cfg, a, r = self.cfg, self.agent, self.rng
        o2_space = self.tau2.observations
        for _ in range(cfg.steps_per_iter):
            self.col2.step(lambda o: a.sample2(o2_space.featurize(o)[None], r.explore)[0])
            if self.tau1 is not None:
                o1_space = self.tau1.observations
                self.col1.step(lambda o: a.sample1(o1_space.featurize(o)[None], r.explore)[0])
        B = cfg.batch_size
        # step 0: critics
        for _ in range(cfg.critic_steps):
            b2 = self.buf2.sample(r.sample, B)
            self.q2.td_update(b2, a.sample2(b2.next_obs, r.sample))
            if self.tau1 is not None:
                b1 = self.buf1.sample(r.sample, B)
                self.q1.td_update(b1, a.sample1(b1.next_obs, r.sample))
        # step 1: pi2 ascends Q2 - alpha * Q1, entropy bonus on the log-std
        b2 = self.buf2.sample(r.sample, B)
        eps2 = r.sample.standard_normal((B, self.tau2.actions.dims))
        J2, gp, gl = a.grad2(b2.obs, eps2, self.q2)
        c1 = J2
        if self.tau1 is not None:
            b1 = self.buf1.sample(r.sample, B)
            eps1 = r.sample.standard_normal((B, self.tau2.actions.dims))
            J1, g1 = a.grad1(b1.obs, eps1, self.q1)
            gp = gp - cfg.alpha * g1["pi"]
            gl = gl - cfg.alpha * g1["log_std"]
            c1 = J2 - cfg.alpha * J1
        gl = gl + cfg.entropy_weight
        a.pi = a.pi.with_params(self.opt_pi.step(a.pi.params, -gp))
        a.log_std = np.clip(self.opt_log_std.step(a.log_std, -gl), *LOG_STD_BOUNDS)
        if self.tau1 is None:
            return c1, 0.0
        # step 2: [h, g] ascend Q1 against the updated pi2
        c2, g1 = a.grad1(b1.obs, eps1, self.q1)
        if self.opt_h is not None:
            a.encoder.step(self.opt_h, -g1["h"])
        if self.opt_g is not None:
            a.decoder.step(self.opt_g, -g1["g"])
        return c1, c2

    def policy2(self) -> Policy:
        return self.agent.policy2()

    def composed(self) -> ComposedPolicy:
        return self.agent.composed()
# W5-END:continuous


# W5-BEGIN:loop
@dataclass
class TrainOutcome:
    iterations: int
    converged: bool
    curve: list[CurvePoint] = field(default_factory=list)


def _train(run, label: str) -> TrainOutcome:
    cfg, tau1, tau2 = run.cfg, run.tau1, run.tau2
    monitor = ConvergenceMonitor(cfg.convergence_window, cfg.convergence_tol)
    threshold = (1.0 - cfg.admissibility_tolerance) * tau2.success_threshold
    outcome = TrainOutcome(0, False)
    c1 = c2 = float("nan")
    for it in range(cfg.max_iters):
        c1, c2 = run.iterate(it)
        outcome.iterations = it + 1
        if (it + 1) % cfg.eval_every and it + 1 != cfg.max_iters:
            continue
        seed = run.rng.eval_base + it
        R2 = estimate_return(tau2, run.policy2(), cfg.train_eval_rollouts, seed).value
        R1 = estimate_return(tau1, run.composed(), cfg.train_eval_rollouts, seed).value if tau1 is not None else R2
        monitor.add(R2, R1)
        outcome.curve.append(CurvePoint(it + 1, R2, R1, float(c1), float(c2)))
        logger.info("%s iter %d R2=%.4g R1=%.4g c1=%.4g c2=%.4g", label, it + 1, R2, R1, c1, c2)
        if monitor.converged and R2 >= threshold:
            outcome.converged = True
            break
    return outcome


def _run_for(tau1, tau2, h_arch, g_arch, pi_arch, critic_arch, config: EstimatorConfig):
    discrete = isinstance(tau2.actions, FiniteSpace)
    cfg = config.resolved(discrete)
    cls = _DiscreteRun if discrete else _ContinuousRun
    return cls(tau1, tau2, h_arch, g_arch, pi_arch, critic_arch or DEFAULT_CRITIC, cfg)


def _finish(run, outcome: TrainOutcome, pi_arch, h_arch, g_arch) -> ComplexityResult:
    cfg, tau1, tau2 = run.cfg, run.tau1, run.tau2
    seed = run.rng.eval_base + cfg.max_iters
    composed = run.composed()
    est = estimate_return(tau1, composed, cfg.eval_rollouts, seed)
    value = min(max(1.0 - est.value / tau1.success_threshold, 0.0), 1.0)
    policy2 = run.policy2()
    admissible = is_admissible(tau2, policy2, Sampled(cfg.eval_rollouts, cfg.admissibility_tolerance, seed))
    if not admissible:
        logger.warning("pi2 not admissible on %s after %d iterations (alpha=%g, seed=%d)",
                       tau2.name, outcome.iterations, cfg.alpha, cfg.seed)
    digest = hashlib.sha256(canonical_json({
        "tasks": [tau1.digest, tau2.digest],
        "config": cfg.to_dict(),
        "arch": {"pi": pi_arch.to_dict(), "h": h_arch.to_dict(), "g": g_arch.to_dict()},
    }).encode()).hexdigest()[:16]
    return ComplexityResult(
        value=value,
        method="adversarial",
        attaining_policy=policy2,
        attaining_pair=(composed.encoder, composed.decoder),
        seed=cfg.seed,
        alpha=cfg.alpha,
        inner_admissible=admissible,
        config_digest=digest,
        metadata={
            "iterations": outcome.iterations,
            "converged": outcome.converged,
            "r1": est.value,
            "r1_stderr": est.stderr,
            "eval_seed": seed,
            "eval_rollouts": cfg.eval_rollouts,
            "tasks": [tau1.name, tau2.name],
            "curve": [p._asdict() for p in outcome.curve],
        },
    )
# W5-END:loop


# W5-BEGIN:estimators
def estimate_alg1(tau1: TaskSpec, tau2: TaskSpec, h_arch: ArchSpec, g_arch: ArchSpec, pi_arch: ArchSpec,
                  config: EstimatorConfig, critic_arch: ArchSpec | None = None) -> ComplexityResult:
    """Q-learning-loss estimator for finite action spaces."""
    if not isinstance(tau2.actions, FiniteSpace):
        raise ConfigurationError("estimate_alg1 needs finite action spaces")
    run = _run_for(tau1, tau2, h_arch, g_arch, pi_arch, critic_arch, config)
    return _finish(run, _train(run, f"{tau1.name}/{tau2.name}"), pi_arch, h_arch, g_arch)


def estimate_alg2(tau1: TaskSpec, tau2: TaskSpec, h_arch: ArchSpec, g_arch: ArchSpec, pi_arch: ArchSpec,
                  config: EstimatorConfig, critic_arch: ArchSpec | None = None) -> ComplexityResult:
    """Actor-critic estimator for box action spaces."""
    if not isinstance(tau2.actions, BoxSpace):
        raise ConfigurationError("estimate_alg2 needs box action spaces")
    run = _run_for(tau1, tau2, h_arch, g_arch, pi_arch, critic_arch, config)
    return _finish(run, _train(run, f"{tau1.name}/{tau2.name}"), pi_arch, h_arch, g_arch)


def estimate(tau1, tau2, h_arch, g_arch, pi_arch, config, critic_arch=None) -> ComplexityResult:
    if isinstance(tau1.actions, FiniteSpace) and isinstance(tau2.actions, FiniteSpace):
        return estimate_alg1(tau1, tau2, h_arch, g_arch, pi_arch, config, critic_arch)
    if isinstance(tau1.actions, BoxSpace) and isinstance(tau2.actions, BoxSpace):
        return estimate_alg2(tau1, tau2, h_arch, g_arch, pi_arch, config, critic_arch)
    raise ConfigurationError("task pair mixes finite and box action spaces")


def recompute_estimate(tau1: TaskSpec, result: ComplexityResult, n_rollouts: int, seed: int) -> ReturnEstimate:
    """Re-evaluate a stored (policy, encoder, decoder) triple on task 1."""
    h, g = result.attaining_pair
    return estimate_return(tau1, ComposedPolicy(h, result.attaining_policy, g), n_rollouts, seed)


@dataclass
class IndividualResult:
    policy: Policy
    estimate: ReturnEstimate
    iterations: int
    converged: bool
    curve: list[CurvePoint]
    seed: int


def train_individual(task: TaskSpec, policy_arch: ArchSpec, config: EstimatorConfig,
                     critic_arch: ArchSpec | None = None) -> IndividualResult:
    """Train one policy on one task in isolation (alpha plays no role)."""
    run = _run_for(None, task, ArchSpec(None), ArchSpec(None), policy_arch, critic_arch, config)
    outcome = _train(run, task.name)
    seed = run.rng.eval_base + run.cfg.max_iters
    policy = run.policy2()
    est = estimate_return(task, policy, run.cfg.eval_rollouts, seed)
    return IndividualResult(policy, est, outcome.iterations, outcome.converged, outcome.curve, run.cfg.seed)
# W5-END:estimators


# W5-BEGIN:sweep
class EstimateJob(NamedTuple):
    tau1: TaskSpec
    tau2: TaskSpec
    h_arch: ArchSpec
    g_arch: ArchSpec
    pi_arch: ArchSpec
    critic_arch: ArchSpec | None
    config: EstimatorConfig


def run_job(job: EstimateJob) -> ComplexityResult:
    """Top-level so worker pools can pickle it."""
    return estimate(job.tau1, job.tau2, job.h_arch, job.g_arch, job.pi_arch, job.config, job.critic_arch)


@dataclass(frozen=True)
class SweepPoint:
    alpha: float
    mean: float
    std: float
    admissible_rate: float
    results: tuple[ComplexityResult, ...]


@dataclass(frozen=True)
class SweepResult:
    tau1: str
    tau2: str
    curve: tuple[SweepPoint, ...]
    selected: SweepPoint | None

    @property
    def no_admissible(self) -> bool:
        return self.selected is None

    @property
    def selected_alpha(self) -> float | None:
        return None if self.selected is None else self.selected.alpha


def seed_list(base_seed: int, count: int | Sequence[int]) -> list[int]:
    """Consecutive seeds from `base_seed`, or an explicit list passed through."""
    if not isinstance(count, int):
        seeds = [_validate.nonneg_int("seed", s) for s in count]
        if not seeds:
            raise ConfigurationError("seed list must be nonempty")
        return seeds
    return [int(base_seed) + i for i in range(_validate.positive_int("per_alpha_seeds", count))]


def sweep_jobs(tau1, tau2, alphas: Sequence[float], base_config: EstimatorConfig, per_alpha_seeds: int | Sequence[int],
               h_arch, g_arch, pi_arch, critic_arch=None) -> list[EstimateJob]:
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ConfigurationError("alphas must be nonempty")
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ConfigurationError("alphas must be sorted ascending")
    return [EstimateJob(tau1, tau2, h_arch, g_arch, pi_arch, critic_arch, base_config.with_(alpha=a, seed=s))
            for a in alphas for s in seed_list(base_config.seed, per_alpha_seeds)]


def summarize_sweep(tau1: str, tau2: str, results: Iterable[ComplexityResult]) -> SweepResult:
    by_alpha: dict[float, list[ComplexityResult]] = {}
    for r in results:
        by_alpha.setdefault(float(r.alpha), []).append(r)
    curve = []
    for alpha in sorted(by_alpha):
        rs = tuple(sorted(by_alpha[alpha], key=lambda r: r.seed))
        vals = np.array([r.value for r in rs])
        curve.append(SweepPoint(alpha, float(vals.mean()), float(vals.std()),
                                float(np.mean([r.inner_admissible for r in rs])), rs))
    admissible = [p for p in curve if p.admissible_rate == 1.0]
    return SweepResult(tau1, tau2, tuple(curve), admissible[-1] if admissible else None)


def alpha_sweep(tau1: TaskSpec, tau2: TaskSpec, alphas: Sequence[float], base_config: EstimatorConfig,
                per_alpha_seeds: int = 5, *, h_arch: ArchSpec, g_arch: ArchSpec, pi_arch: ArchSpec,
                critic_arch: ArchSpec | None = None, map_fn: Callable = map) -> SweepResult:
    """Estimator per (alpha, seed); selects the largest alpha whose seeds all yield an admissible pi2."""
    jobs = sweep_jobs(tau1, tau2, alphas, base_config, per_alpha_seeds, h_arch, g_arch, pi_arch, critic_arch)
    sweep = summarize_sweep(tau1.name, tau2.name, map_fn(run_job, jobs))
    if sweep.no_admissible:
        logger.warning("no admissible alpha for %s/%s", tau1.name, tau2.name)
    return sweep
# W5-END:sweep


# W5-BEGIN:studies
@dataclass(frozen=True)
class StudyCell:
    space: str
    arch: ArchSpec
    mean: float
    std: float
    admissible_rate: float
    results: tuple[ComplexityResult, ...]

    @property
    def depth(self) -> str:
        return self.arch.label


def study_jobs(tau1, tau2, h_variants, g_variants, config: EstimatorConfig, seeds: int | Sequence[int], pi_arch: ArchSpec,
               critic_arch=None, fixed_h: ArchSpec = ArchSpec(2), fixed_g: ArchSpec = ArchSpec(1)):
    """(space, arch, job) triples: H varies with g fixed at one hidden layer, G with h at two."""
    out = []
    for space, variants in (("H", h_variants), ("G", g_variants)):
        for arch in variants:
            h, g = (arch, fixed_g) if space == "H" else (fixed_h, arch)
            for s in seed_list(config.seed, seeds):
                out.append((space, arch, EstimateJob(tau1, tau2, h, g, pi_arch, critic_arch, config.with_(seed=s))))
    return out


def summarize_study(keyed: Iterable[tuple[str, ArchSpec, ComplexityResult]]) -> list[StudyCell]:
    """One cell per (space, architecture); archs sharing a depth stay apart."""
    cells: dict[tuple[str, ArchSpec], list[ComplexityResult]] = {}
    for space, arch, r in keyed:
        cells.setdefault((space, arch), []).append(r)
    out = []
    for (space, arch), rs in cells.items():
        vals = np.array([r.value for r in rs])
        out.append(StudyCell(space, arch, float(vals.mean()), float(vals.std()),
                             float(np.mean([r.inner_admissible for r in rs])), tuple(rs)))
    return out


def model_complexity_study(tau1: TaskSpec, tau2: TaskSpec, h_variants: Sequence[ArchSpec],
                           g_variants: Sequence[ArchSpec], config: EstimatorConfig, seeds: int = 5, *,
                           pi_arch: ArchSpec, critic_arch: ArchSpec | None = None,
                           map_fn: Callable = map) -> list[StudyCell]:
    """Mean and std of C~ per encoder/decoder depth, seeds assigned deterministically."""
    triples = study_jobs(tau1, tau2, h_variants, g_variants, config, seeds, pi_arch, critic_arch)
    results = map_fn(run_job, [j for _, _, j in triples])
    return summarize_study((sp, a, r) for (sp, a, _), r in zip(triples, results))


@dataclass(frozen=True)
class PairCell:
    tau1: str
    tau2: str
    sweep: SweepResult


def pairwise_study(tasks: Sequence[TaskSpec], alphas: Sequence[float], base_config: EstimatorConfig,
                   seeds: int = 5, *, h_arch: ArchSpec, g_arch: ArchSpec, pi_arch: ArchSpec,
                   critic_arch: ArchSpec | None = None, map_fn: Callable = map) -> list[PairCell]:
    """Alpha sweep for every ordered pair of distinct tasks."""
    cells = []
    for t1 in tasks:
        for t2 in tasks:
            if t1 is t2:
                continue
            sweep = alpha_sweep(t1, t2, alphas, base_config, seeds, h_arch=h_arch, g_arch=g_arch,
                                pi_arch=pi_arch, critic_arch=critic_arch, map_fn=map_fn)
            cells.append(PairCell(t1.name, t2.name, sweep))
    return cells
# W5-END:studies


__all__ = [
    "EstimatorConfig", "CurvePoint", "IndividualResult", "SweepPoint", "SweepResult", "StudyCell", "PairCell",
    "EstimateJob", "q_learning_loss", "estimate_alg1", "estimate_alg2", "estimate", "recompute_estimate",
    "train_individual", "alpha_sweep", "model_complexity_study", "pairwise_study", "run_job",
    "sweep_jobs", "summarize_sweep", "study_jobs", "summarize_study", "seed_list",
]
