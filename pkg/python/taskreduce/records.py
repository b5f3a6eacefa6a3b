"""
Result records: one JSON object per line, schema-versioned, keys sorted.

Every record type is a pydantic model, so a line written by `RecordAppender`
re-parses into the same model with `parse_record`.
"""
from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Annotated, Any, Iterator, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter

from .complexity import ComplexityResult
from .errors import ConfigurationError
from .reduction import AuditReport, ReductionVerdict, Transform
from .taskcore import TaskSpec, policy_from_dict

SCHEMA = 1


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    schema_version: Literal[1] = Field(SCHEMA, alias="schema")
    experiment: str = ""


# W8-BEGIN:types
class ComplexityRecord(_Record):
    record: Literal["complexity"] = "complexity"
    job: int
    tau1: str
    tau2: str
    task_digests: list[str]
    method: Literal["exact", "adversarial"]
    value: float
    alpha: float | None = None
    seed: int | None = None
    inner_admissible: bool
    config_digest: str
    space: Literal["H", "G"] | None = None
    depth: str | None = None
    arch: str | None = None
    metadata: dict[str, Any] = Field(default_factory=dict)
    attaining_policy: Any = None
    attaining_pair: list[dict[str, Any]] | None = None

    @classmethod
    def of(cls, result: ComplexityResult, tau1: TaskSpec, tau2: TaskSpec, job: int, **extra) -> "ComplexityRecord":
        d = result.to_dict()
        meta = {k: v for k, v in d["metadata"].items() if k != "curve"}
        return cls(job=job, tau1=tau1.name, tau2=tau2.name, task_digests=[tau1.digest, tau2.digest],
                   method=d["method"], value=d["value"], alpha=d["alpha"], seed=d["seed"],
                   inner_admissible=d["inner_admissible"], config_digest=d["config_digest"], metadata=meta,
                   attaining_policy=d["attaining_policy"], attaining_pair=d["attaining_pair"], **extra)

    def to_result(self, tau1: TaskSpec, tau2: TaskSpec) -> ComplexityResult:
        """Rebuild the domain result, including the attaining triple, against the same tasks."""
        if [tau1.digest, tau2.digest] != self.task_digests:
            raise ConfigurationError("record was produced for different tasks")
        policy = policy_from_dict(self.attaining_policy, tau2.observations, tau2.actions)
        h, g = self.attaining_pair
        pair = (Transform.from_dict(h, tau1.observations, tau2.observations),
                Transform.from_dict(g, tau2.actions, tau1.actions))
        return ComplexityResult(self.value, self.method, policy, pair, self.seed, self.alpha,
                                self.inner_admissible, self.config_digest, dict(self.metadata))


class ReductionRecord(_Record):
    record: Literal["reduction"] = "reduction"
    tau1: str
    tau2: str
    task_digests: list[str]
    holds: bool
    quantified: int
    witnesses: list[list[int]]
    counterexample_index: int | None = None
    counterexample: list[int] | None = None
    equivalent: bool | None = None

    @classmethod
    def of(cls, verdict: ReductionVerdict, tau1: TaskSpec, tau2: TaskSpec, **extra) -> "ReductionRecord":
        d = verdict.to_dict()
        return cls(tau1=tau1.name, tau2=tau2.name, task_digests=d["task_digests"], holds=d["holds"],
                   quantified=d["quantified"], witnesses=d["witnesses"],
                   counterexample_index=d["counterexample_index"], counterexample=d["counterexample"], **extra)


class AuditRecord(_Record):
    record: Literal["audit"] = "audit"
    tasks: list[str]
    reduces: list[list[bool]]
    passed: bool
    checks: dict[str, Any]
    axioms: dict[str, Any]

    @classmethod
    def of(cls, report: AuditReport, **extra) -> "AuditRecord":
        return cls(**report.to_dict(), **extra)


class CalibrationRecord(_Record):
    record: Literal["calibration"] = "calibration"
    task: str
    seed: int
    individual_return: float
    success_threshold: float
    iterations: int
    converged: bool


class SweepPointSummary(BaseModel):
    model_config = ConfigDict(extra="forbid")

    alpha: float
    mean: float
    std: float
    admissible_rate: float
    seeds: int


class SweepSummaryRecord(_Record):
    record: Literal["sweep-summary"] = "sweep-summary"
    tau1: str
    tau2: str
    selected_alpha: float | None
    no_admissible: bool
    points: list[SweepPointSummary]

    @classmethod
    def of(cls, sweep, **extra) -> "SweepSummaryRecord":
        points = [SweepPointSummary(alpha=p.alpha, mean=p.mean, std=p.std, admissible_rate=p.admissible_rate,
                                    seeds=len(p.results)) for p in sweep.curve]
        return cls(tau1=sweep.tau1, tau2=sweep.tau2, selected_alpha=sweep.selected_alpha,
                   no_admissible=sweep.no_admissible, points=points, **extra)

    @property
    def selected(self) -> SweepPointSummary | None:
        return next((p for p in self.points if p.alpha == self.selected_alpha), None)


class StudyCellRecord(_Record):
    record: Literal["study-cell"] = "study-cell"
    tau1: str
    tau2: str
    space: Literal["H", "G"]
    depth: str
    arch: str | None = None
    mean: float
    std: float
    admissible_rate: float
    seeds: int


class ErrorRecord(_Record):
    record: Literal["error"] = "error"
    job: int | None = None
    error_type: str
    message: str
    context: dict[str, Any] = Field(default_factory=dict)


Record = Annotated[
    Union[ComplexityRecord, ReductionRecord, AuditRecord, CalibrationRecord, SweepSummaryRecord,
          StudyCellRecord, ErrorRecord],
    Field(discriminator="record"),
]
_ADAPTER = TypeAdapter(Record)
# W8-END:types


# W8-BEGIN:io
def dump_record(rec: _Record) -> str:
    return json.dumps(rec.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))


def parse_record(line: str | dict) -> _Record:
    data = json.loads(line) if isinstance(line, str) else line
    return _ADAPTER.validate_python(data)


def read_records(path: str | Path) -> Iterator[_Record]:
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                yield parse_record(line)


class RecordAppender:
    """Single writer for a JSON-lines file; appends are serialized by a lock."""

    def __init__(self, path: str | Path, mode: str = "w"):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, mode, encoding="utf-8")
        self._lock = threading.Lock()
        self.count = 0
        self.errors = 0

    def append(self, rec: _Record) -> None:
        line = dump_record(rec)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()
            self.count += 1
            self.errors += isinstance(rec, ErrorRecord)

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "RecordAppender":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
# W8-END:io


__all__ = [
    "SCHEMA", "ComplexityRecord", "ReductionRecord", "AuditRecord", "CalibrationRecord", "SweepSummaryRecord",
    "SweepPointSummary", "StudyCellRecord", "ErrorRecord", "Record", "dump_record", "parse_record",
    "read_records", "RecordAppender",
]
