"""
Experiment files: YAML documents validated by pydantic before any compute.

Unknown keys are rejected. `key.path=value` overrides are parsed with YAML scalar
rules and applied before validation; the output directory can also be overridden
with TR_OUTPUT_DIR. Validation failures carry the field path and, when the key
exists in the file, its line number.
"""
from __future__ import annotations

import hashlib
import os
from pathlib import Path
from typing import Annotated, Any, Literal, Sequence, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, model_validator

from .advest import EstimatorConfig
from .errors import ConfigurationError
from .learners import ArchSpec
from .envs import toy
from .envs.cartpole import CartpoleParams, make_cartpole
from .envs.gridworld import (
    GridWorldParams,
    admissible_family,
    make_gridworld,
    rotation_decoder,
    rotation_encoder,
    rotation_family,
)
from .envs.speedtrack import SpeedTrackParams, make_speed_tracker
from .reduction import Decoder, Encoder, FunctionSpace, SpaceFamily
from .taskcore import TaskSpec, canonical_json, enumerate_admissible

OUTPUT_ENV = "TR_OUTPUT_DIR"


class ConfigValidationError(ConfigurationError):
    def __init__(self, path: str, diagnostics: Sequence[dict]):
        self.path = path
        self.diagnostics = list(diagnostics)
        lines = [f"{path}:{d['line'] or '?'}: {d['field']}: {d['message']}" for d in self.diagnostics]
        super().__init__("invalid experiment file\n" + "\n".join(lines))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# W7-BEGIN:tasks
class GridworldTask(_Strict):
    env: Literal["gridworld"]
    goal_dir: Literal["N", "E", "S", "W"] = "N"
    n: int = Field(2, ge=1)
    m: int = Field(0, ge=0)
    step_d: int = Field(1, ge=1)
    horizon: int | None = Field(None, ge=1)
    max_layouts: int | None = Field(None, ge=1)
    layout_seed: int = Field(0, ge=0)

    def params(self, goal_dir: str | None = None):
        return GridWorldParams(n=self.n, m=self.m, goal_dir=goal_dir or self.goal_dir, step_d=self.step_d,
                               horizon=self.horizon, max_layouts=self.max_layouts)

    def build(self) -> TaskSpec:
        return make_gridworld(self.params(), self.layout_seed)


class CartpoleTask(_Strict):
    env: Literal["cartpole"]
    direction: Literal["up", "down"] = "up"
    horizon: int = Field(200, ge=1)
    angle_limit_deg: float = Field(24.0, gt=0)
    x_limit: float = Field(2.4, gt=0)
    force: float = Field(10.0, gt=0)
    tau: float = Field(0.02, gt=0)
    init_noise: float = Field(0.05, ge=0)

    def build(self) -> TaskSpec:
        p = CartpoleParams(direction=self.direction, horizon=self.horizon, angle_limit_deg=self.angle_limit_deg,
                           x_limit=self.x_limit, force=self.force, tau=self.tau, init_noise=self.init_noise)
        return make_cartpole(self.direction, p)


class SpeedTrackerTask(_Strict):
    env: Literal["speed-tracker"]
    target_speed: float = Field(1.0, ge=0.3, le=2.0)
    horizon: int = Field(1000, ge=1)
    action_penalty: float = Field(0.001, ge=0)
    success_threshold: float | None = Field(None, gt=0)

    def build(self) -> TaskSpec:
        task = make_speed_tracker(self.target_speed, SpeedTrackParams(
            target_speed=self.target_speed, horizon=self.horizon, action_penalty=self.action_penalty))
        return task if self.success_threshold is None else task.with_threshold(self.success_threshold)


class ToyTask(_Strict):
    env: Literal["toy"]
    name: Literal["oracle-1", "oracle-2", "coin", "chain", "one-shot"]
    rewards: list[list[float]] | None = None
    success_threshold: float | None = Field(None, gt=0)
    horizon: int = Field(3, ge=1)

    @model_validator(mode="after")
    def _rewards_for_one_shot(self):
        if self.name == "one-shot" and self.rewards is None:
            raise ValueError("one-shot toy tasks need a rewards matrix")
        return self

    def build(self) -> TaskSpec:
        if self.name in ("oracle-1", "oracle-2"):
            t1, t2 = toy.oracle_pair()
            return t1 if self.name == "oracle-1" else t2
        if self.name == "coin":
            return toy.coin_flip()
        if self.name == "chain":
            return toy.unit_chain(self.horizon, success_threshold=self.success_threshold or 10.0)
        return toy.one_shot("one-shot", self.rewards, success_threshold=self.success_threshold)


TaskBlock = Annotated[Union[GridworldTask, CartpoleTask, SpeedTrackerTask, ToyTask], Field(discriminator="env")]
# W7-END:tasks


# W7-BEGIN:blocks
class ArchBlock(_Strict):
    depth: int | None = Field(2, ge=0)
    width: int = Field(64, ge=1)
    activation: Literal["tanh", "relu"] = "tanh"

    def to_arch(self) -> ArchSpec:
        return ArchSpec(self.depth, self.width, self.activation)


def arch_or_none(block: ArchBlock | None) -> ArchSpec | None:
    return None if block is None else block.to_arch()


class SpaceBlock(_Strict):
    """Explicit encoder/decoder space for exact experiments."""

    kind: Literal["identity", "all", "rotation"] = "identity"
    ks: list[int] = Field(default_factory=lambda: [0, 1, 2, 3])

    def build(self, domain, codomain, role: str) -> FunctionSpace:
        kind = Encoder if role == "encoder" else Decoder
        if self.kind == "identity":
            if domain.compatible(codomain):
                return FunctionSpace.identity(domain, role)
            return FunctionSpace.of([kind.identity()], domain=domain, codomain=codomain, contains_identity=True)
        if self.kind == "all":
            return FunctionSpace.all_functions(domain, codomain, role)
        make = rotation_encoder if role == "encoder" else rotation_decoder
        return FunctionSpace.of([make(k) for k in self.ks], domain=domain, codomain=codomain,
                                contains_identity=0 in self.ks)


class AdmissibleBlock(_Strict):
    source: Literal["enumerate", "gridworld"] = "enumerate"
    random_count: int = Field(64, ge=0)
    seed: int = Field(0, ge=0)
    cap: int = Field(10**6, ge=1)

    def build(self, task: TaskSpec) -> list:
        if self.source == "gridworld":
            return admissible_family(task, self.random_count, self.seed)
        return enumerate_admissible(task, cap=self.cap)


class EstimatorBlock(_Strict):
    alpha: float = Field(1.0, ge=0)
    lr_policy: float = Field(1e-3, gt=0)
    lr_enc_dec: float = Field(1e-3, gt=0)
    lr_critic: float = Field(1e-3, gt=0)
    batch_size: int | None = Field(None, ge=1)
    max_iters: int | None = Field(None, ge=1)
    eval_rollouts: int = Field(20, ge=1)
    admissibility_tolerance: float = Field(0.05, ge=0)
    gamma: float = Field(0.99, gt=0, le=1)
    replay_capacity: int = Field(100_000, ge=1)
    eps_start: float = Field(1.0, ge=0, le=1)
    eps_end: float = Field(0.05, ge=0, le=1)
    eps_fraction: float = Field(1.0 / 3.0, ge=0, le=1)
    entropy_weight: float = Field(0.01, ge=0)
    init_log_std: float = -0.5
    steps_per_iter: int = Field(10, ge=1)
    critic_steps: int = Field(1, ge=1)
    target_every: int = Field(100, ge=1)
    eval_every: int = Field(10, ge=1)
    train_eval_rollouts: int = Field(5, ge=1)
    convergence_window: int = Field(50, ge=1)
    convergence_tol: float = Field(0.01, ge=0)
    critic_loss_limit: float = Field(1e6, gt=0)
    advantage: bool = False

    def to_config(self, seed: int = 0, **changes) -> EstimatorConfig:
        return EstimatorConfig(**{**self.model_dump(), "seed": seed, **changes})
# W7-END:blocks


# W7-BEGIN:experiments
class _Common(_Strict):
    name: str = "experiment"
    seeds: list[Annotated[int, Field(ge=0)]] = Field(default_factory=lambda: [0], min_length=1)
    workers: int = Field(1, ge=1)
    output: str = "results"


class _ExactPair(_Common):
    tau1: TaskBlock
    tau2: TaskBlock
    encoders: SpaceBlock = SpaceBlock()
    decoders: SpaceBlock = SpaceBlock()
    admissible: AdmissibleBlock = AdmissibleBlock()


class CheckReductionExperiment(_ExactPair):
    kind: Literal["check-reduction"]
    equivalence: bool = False
    admissible1: AdmissibleBlock = AdmissibleBlock()


class ExactComplexityExperiment(_ExactPair):
    kind: Literal["exact-complexity"]


class _Learned(_Common):
    pi: ArchBlock = ArchBlock()
    critic: ArchBlock | None = None
    estimator: EstimatorBlock = EstimatorBlock()


class EstimateExperiment(_Learned):
    kind: Literal["estimate"]
    tau1: TaskBlock
    tau2: TaskBlock
    h: ArchBlock = ArchBlock(depth=None)
    g: ArchBlock = ArchBlock(depth=None)


def _ascending(values: list[float]) -> list[float]:
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("alphas must be sorted ascending")
    return values


class AlphaSweepExperiment(_Learned):
    kind: Literal["alpha-sweep"]
    tau1: TaskBlock
    tau2: TaskBlock
    alphas: list[Annotated[float, Field(ge=0)]] = Field(min_length=1)
    both_directions: bool = False
    h: ArchBlock = ArchBlock(depth=2)
    g: ArchBlock = ArchBlock(depth=1)

    @model_validator(mode="after")
    def _sorted(self):
        _ascending(self.alphas)
        return self


class ModelStudyExperiment(_Learned):
    kind: Literal["model-study"]
    tau1: TaskBlock
    tau2: TaskBlock
    h_depths: list[int | None] = Field(default_factory=lambda: [None, 0, 1, 2])
    g_depths: list[int | None] = Field(default_factory=lambda: [None, 0, 1, 2])
    width: int = Field(64, ge=1)


class AuditExperiment(_Common):
    kind: Literal["audit"]
    family: Literal["gridworld-rotation", "toy-cyclic"] = "gridworld-rotation"
    gridworld: GridworldTask | None = None
    admissible: AdmissibleBlock = AdmissibleBlock(source="gridworld")


class CalibrateExperiment(_Learned):
    kind: Literal["calibrate"]
    tasks: list[TaskBlock] = Field(min_length=1)
    floor: float | None = Field(None, ge=0)


class PairwiseExperiment(_Learned):
    kind: Literal["pairwise"]
    tasks: list[TaskBlock] = Field(min_length=2)
    alphas: list[Annotated[float, Field(ge=0)]] = Field(min_length=1)
    calibrate: bool = True
    floor: float | None = Field(None, ge=0)
    h: ArchBlock = ArchBlock(depth=2)
    g: ArchBlock = ArchBlock(depth=1)

    @model_validator(mode="after")
    def _sorted(self):
        _ascending(self.alphas)
        return self


Experiment = Annotated[
    Union[CheckReductionExperiment, ExactComplexityExperiment, EstimateExperiment, AlphaSweepExperiment,
          ModelStudyExperiment, AuditExperiment, CalibrateExperiment, PairwiseExperiment],
    Field(discriminator="kind"),
]
_ADAPTER = TypeAdapter(Experiment)
# W7-END:experiments


# W7-BEGIN:load
def parse_override(text: str) -> tuple[list[str], Any]:
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ConfigurationError(f"override must look like key.path=value, got {text!r}")
    return key.strip().split("."), yaml.safe_load(raw) if raw.strip() else None


def apply_overrides(data: dict, overrides: Sequence[str]) -> dict:
    out = dict(data)
    for text in overrides:
        path, value = parse_override(text)
        node = out
        for part in path[:-1]:
            child = node.get(part)
            if isinstance(child, list):
                raise ConfigurationError(f"override {text!r} indexes into a list; edit the file instead")
            child = dict(child or {})
            node[part] = child
            node = child
        node[path[-1]] = value
    return out


def _clean_loc(data: Any, loc: Sequence) -> list:
    """Drop discriminator tags pydantic inserts for tagged unions; they are not keys of the document."""
    out, node = [], data
    for part in loc:
        if isinstance(node, dict) and part not in node and part in (node.get("kind"), node.get("env")):
            continue
        out.append(part)
        if isinstance(node, dict):
            node = node.get(part)
        elif isinstance(node, list) and isinstance(part, int) and part < len(node):
            node = node[part]
        else:
            node = None
    return out


def _line_of(root: yaml.Node | None, loc: Sequence) -> int | None:
    """1-based line of the deepest mapping key or sequence item on `loc` found in the document."""
    node, line = root, None
    for part in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = next(((k, v) for k, v in node.value if k.value == part), None)
            if nxt is None:
                break
            line, node = nxt[0].start_mark.line + 1, nxt[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            break
    return line


def diagnostics(err: ValidationError, data: Any, root: yaml.Node | None) -> list[dict]:
    out = []
    for e in err.errors():
        loc = _clean_loc(data, e["loc"])
        out.append({"field": ".".join(str(p) for p in loc) or "<document>", "message": e["msg"],
                    "line": _line_of(root, loc)})
    return out


def validate_data(data: Any, path: str = "<memory>", root: yaml.Node | None = None):
    try:
        return _ADAPTER.validate_python(data)
    except ValidationError as e:
        raise ConfigValidationError(path, diagnostics(e, data, root)) from None


def load_experiment(path: str | os.PathLike, overrides: Sequence[str] = ()):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigValidationError(str(path), [{"field": "<document>", "message": str(e), "line": None}]) from None
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigValidationError(str(path), [{"field": "<document>", "message": str(e), "line": line}]) from None
    if not isinstance(data, dict):
        raise ConfigValidationError(str(path), [{"field": "<document>", "message": "top level must be a mapping",
                                                 "line": 1}])
    data = apply_overrides(data, overrides)
    if os.environ.get(OUTPUT_ENV):
        data["output"] = os.environ[OUTPUT_ENV]
    return validate_data(data, str(path), root)


def experiment_digest(exp) -> str:
    payload = exp.model_dump(mode="json", exclude={"output", "workers"})
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()[:16]
# W7-END:load


# W7-BEGIN:families
def gridworld_rotation_family(block: GridworldTask) -> SpaceFamily:
    return rotation_family(block.params(), block.layout_seed)


def toy_cyclic_family():
    return toy.cyclic_family()
# W7-END:families


__all__ = [
    "ConfigValidationError", "GridworldTask", "CartpoleTask", "SpeedTrackerTask", "ToyTask", "ArchBlock",
    "SpaceBlock", "AdmissibleBlock", "EstimatorBlock", "CheckReductionExperiment", "ExactComplexityExperiment",
    "EstimateExperiment", "AlphaSweepExperiment", "ModelStudyExperiment", "AuditExperiment",
    "CalibrateExperiment", "PairwiseExperiment", "Experiment", "load_experiment", "validate_data",
    "apply_overrides", "parse_override", "experiment_digest", "arch_or_none", "OUTPUT_ENV",
]
