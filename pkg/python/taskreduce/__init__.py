"""
taskreduce: task reductions and relative complexity for POMDP-formalized tasks.

Public API:
- TaskSpec, Policy, rollout, estimate_return, exact_return, is_admissible, enumerate_admissible
- Encoder, Decoder, FunctionSpace, compose, check_reduction, check_equivalence, partial_order_audit
- exact_relative_complexity, consistency_check, check_monotonicity
- MlpNet, backward, Sgd, Adam
- EstimatorConfig, estimate_alg1, estimate_alg2, alpha_sweep, model_complexity_study, pairwise_study
- envs: make_gridworld, rotation_encoder/decoder, make_cartpole, make_speed_tracker, calibrate_success_threshold
- __version__: str
"""
from __future__ import annotations

from .errors import (
    CalibrationError,
    ComplexityUndefinedError,
    ConfigurationError,
    EnumerationCapError,
    PreconditionError,
    TaskReduceError,
    TrainingError,
    UnsupportedOperationError,
    UsageError,
)
from .taskcore import (
    BoxSpace,
    Exact,
    FiniteSpace,
    Policy,
    Sampled,
    TaskSpec,
    enumerate_admissible,
    estimate_return,
    exact_return,
    is_admissible,
    rollout,
)
from .reduction import (
    Decoder,
    Encoder,
    FunctionSpace,
    SpaceFamily,
    check_equivalence,
    check_reduction,
    compose,
    partial_order_audit,
    verify_space_axioms,
)
from .complexity import ComplexityResult, check_monotonicity, consistency_check, exact_relative_complexity
from .diffnet import Adam, MlpNet, Sgd, backward, initialize
from .learners import ArchSpec
from .advest import (
    EstimatorConfig,
    alpha_sweep,
    estimate,
    estimate_alg1,
    estimate_alg2,
    model_complexity_study,
    pairwise_study,
    train_individual,
)
# registers the grid-world closed forms
from .envs import (
    calibrate_success_threshold,
    make_cartpole,
    make_gridworld,
    make_speed_tracker,
    rotation_decoder,
    rotation_encoder,
)

try:
    from importlib.metadata import version as _pkg_version
    __version__ = _pkg_version("taskreduce")
except Exception:
    __version__ = "0.1.0"

__all__ = [
    "TaskReduceError", "ConfigurationError", "UnsupportedOperationError", "PreconditionError",
    "EnumerationCapError", "UsageError", "TrainingError", "CalibrationError", "ComplexityUndefinedError",
    "FiniteSpace", "BoxSpace", "TaskSpec", "Policy", "Exact", "Sampled", "rollout", "estimate_return",
    "exact_return", "is_admissible", "enumerate_admissible",
    "Encoder", "Decoder", "FunctionSpace", "SpaceFamily", "compose", "check_reduction", "check_equivalence",
    "verify_space_axioms", "partial_order_audit",
    "ComplexityResult", "exact_relative_complexity", "consistency_check", "check_monotonicity",
    "MlpNet", "initialize", "backward", "Sgd", "Adam", "ArchSpec",
    "EstimatorConfig", "estimate", "estimate_alg1", "estimate_alg2", "train_individual", "alpha_sweep",
    "model_complexity_study", "pairwise_study",
    "make_gridworld", "rotation_encoder", "rotation_decoder", "make_cartpole", "make_speed_tracker",
    "calibrate_success_threshold", "__version__",
]
