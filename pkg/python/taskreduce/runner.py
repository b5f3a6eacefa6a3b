"""
Batch execution of a validated experiment.

Independent estimator jobs fan out over a process pool sized by `workers`;
results come back in submission order so record files are identical across
reruns whatever the pool size. Compute errors become `error` records and the
batch continues.

Output layout under `output/`:
  results.jsonl        one record per result
  sweep.csv            alpha-sweep rows per (alpha, seed) plus a selected summary row
  curves/<job>.csv     training curves (iter, R2, R1, c1, c2)
  checkpoints/<job>.json  full result including network parameters
  manifest.json        config digest, seeds, versions, wall times, file digests
"""
from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np

from . import config as cfgmod
from .advest import (
    EstimateJob,
    EstimatorConfig,
    run_job,
    study_jobs,
    summarize_study,
    summarize_sweep,
    sweep_jobs,
)
from .complexity import ComplexityResult, consistency_check, exact_relative_complexity
from .envs.calibration import calibrate_success_threshold
from .errors import TaskReduceError, TrainingError
from .learners import ArchSpec
from .records import (
    AuditRecord,
    CalibrationRecord,
    ComplexityRecord,
    ErrorRecord,
    RecordAppender,
    ReductionRecord,
    StudyCellRecord,
    SweepSummaryRecord,
)
from .reduction import check_equivalence, check_reduction, partial_order_audit, verify_space_axioms
from .taskcore import TaskSpec

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ("direction", "alpha", "seed", "value", "std", "inner_admissible")
CURVE_COLUMNS = ("iter", "R2", "R1", "c1", "c2")


# W9-BEGIN:jobs
@dataclass(frozen=True)
class JobFailure:
    error_type: str
    message: str
    diagnostics: dict = field(default_factory=dict)


def safe_run_job(job: EstimateJob) -> ComplexityResult | JobFailure:
    """Top-level wrapper so worker processes return failures instead of raising."""
    try:
        return run_job(job)
    except (TaskReduceError, FloatingPointError, ValueError) as e:
        diag = dict(e.diagnostics) if isinstance(e, TrainingError) else {}
        return JobFailure(type(e).__name__, str(e), diag)


def _calibrate_one(args) -> Any:
    task, arch, config, floor, critic = args
    try:
        return calibrate_success_threshold(task, arch, config, floor, critic)
    except (TaskReduceError, FloatingPointError, ValueError) as e:
        return JobFailure(type(e).__name__, str(e))


@contextlib.contextmanager
def worker_map(workers: int) -> Iterator[Callable]:
    """Ordered map over a process pool, or the builtin map for a single worker."""
    if workers <= 1:
        yield lambda fn, items: list(map(fn, items))
        return
    with ProcessPoolExecutor(max_workers=workers) as pool:
        yield lambda fn, items: list(pool.map(fn, items))


def job_key(job: EstimateJob) -> str:
    c = job.config
    return f"{job.tau1.name}__{job.tau2.name}__a{c.alpha:g}__s{c.seed}"
# W9-END:jobs


# W9-BEGIN:context
class RunContext:
    """Shared output state for one experiment run."""

    def __init__(self, exp, out_dir: Path, appender: RecordAppender):
        self.exp = exp
        self.out = out_dir
        self.appender = appender
        self.jobs = 0
        self.sweep_rows: list[dict] = []

    def emit(self, rec) -> None:
        rec.experiment = self.exp.name
        self.appender.append(rec)

    def error(self, failure: JobFailure, job: int | None, **context) -> None:
        logger.error("job %s failed: %s: %s", job, failure.error_type, failure.message)
        self.emit(ErrorRecord(job=job, error_type=failure.error_type, message=failure.message,
                              context={**context, **failure.diagnostics}))

    def next_job(self) -> int:
        self.jobs += 1
        return self.jobs - 1

    def write_curve(self, key: str, result: ComplexityResult) -> None:
        path = self.out / "curves" / f"{key}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.DictWriter(f, fieldnames=CURVE_COLUMNS)
            w.writeheader()
            for row in result.metadata.get("curve", []):
                w.writerow({k: row[k] for k in CURVE_COLUMNS})

    def write_checkpoint(self, key: str, result: ComplexityResult) -> None:
        path = self.out / "checkpoints" / f"{key}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(result.to_dict(), sort_keys=True, default=_json_fallback), encoding="utf-8")

    def estimator_results(self, jobs: Sequence[EstimateJob], map_fn,
                          extras: Sequence[dict] | None = None) -> list[ComplexityResult | None]:
        """Run jobs, emit one record each, return results aligned with `jobs` (None on failure)."""
        out: list[ComplexityResult | None] = []
        extras = extras or [{}] * len(jobs)
        for job, res, extra in zip(jobs, map_fn(safe_run_job, list(jobs)), extras):
            idx = self.next_job()
            if isinstance(res, JobFailure):
                self.error(res, idx, tau1=job.tau1.name, tau2=job.tau2.name, alpha=job.config.alpha,
                           seed=job.config.seed)
                out.append(None)
                continue
            key = job_key(job)
            if "space" in extra:
                key = f"{key}__{extra['space']}{extra['arch']}"
            self.write_curve(key, res)
            self.write_checkpoint(key, res)
            self.emit(ComplexityRecord.of(res, job.tau1, job.tau2, idx, **extra))
            out.append(res)
        return out


def _json_fallback(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return repr(o)
# W9-END:context


# W9-BEGIN:handlers
def _spaces(exp, tau1: TaskSpec, tau2: TaskSpec, reverse: bool = False):
    if reverse:
        tau1, tau2 = tau2, tau1
    H = exp.encoders.build(tau1.observations, tau2.observations, "encoder")
    G = exp.decoders.build(tau2.actions, tau1.actions, "decoder")
    return H, G


def _check_reduction(ctx: RunContext, exp, map_fn) -> None:
    t1, t2 = exp.tau1.build(), exp.tau2.build()
    H, G = _spaces(exp, t1, t2)
    adm2 = exp.admissible.build(t2)
    verdict = check_reduction(t1, t2, H, G, adm2)
    equivalent = None
    if exp.equivalence:
        H21, G12 = _spaces(exp, t1, t2, reverse=True)
        equivalent = check_equivalence(t1, t2, H, G, H21, G12, exp.admissible1.build(t1), adm2)
    ctx.emit(ReductionRecord.of(verdict, t1, t2, equivalent=equivalent))


def _exact_complexity(ctx: RunContext, exp, map_fn) -> None:
    t1, t2 = exp.tau1.build(), exp.tau2.build()
    H, G = _spaces(exp, t1, t2)
    adm2 = exp.admissible.build(t2)
    res = exact_relative_complexity(t1, t2, H, G, adm2)
    report = consistency_check(t1, t2, H, G, adm2)
    meta = {**res.metadata, "consistent": report.consistent, "reduction_holds": report.holds}
    res = ComplexityResult(res.value, res.method, res.attaining_policy, res.attaining_pair, None, None,
                           res.inner_admissible, res.config_digest, meta)
    ctx.emit(ComplexityRecord.of(res, t1, t2, ctx.next_job()))


def _base_config(exp, **changes) -> EstimatorConfig:
    return exp.estimator.to_config(exp.seeds[0], **changes)


def _estimate(ctx: RunContext, exp, map_fn) -> None:
    t1, t2 = exp.tau1.build(), exp.tau2.build()
    jobs = [EstimateJob(t1, t2, exp.h.to_arch(), exp.g.to_arch(), exp.pi.to_arch(), cfgmod.arch_or_none(exp.critic),
                        _base_config(exp, seed=s)) for s in exp.seeds]
    ctx.estimator_results(jobs, map_fn)


def _sweep_pair(ctx: RunContext, exp, t1: TaskSpec, t2: TaskSpec, map_fn) -> None:
    jobs = sweep_jobs(t1, t2, exp.alphas, _base_config(exp), exp.seeds, exp.h.to_arch(), exp.g.to_arch(),
                      exp.pi.to_arch(), cfgmod.arch_or_none(exp.critic))
    results = [r for r in ctx.estimator_results(jobs, map_fn) if r is not None]
    direction = f"{t1.name}/{t2.name}"
    for r in results:
        ctx.sweep_rows.append({"direction": direction, "alpha": r.alpha, "seed": r.seed, "value": r.value,
                               "std": "", "inner_admissible": r.inner_admissible})
    if not results:
        return
    sweep = summarize_sweep(t1.name, t2.name, results)
    sel = sweep.selected
    ctx.sweep_rows.append({"direction": direction, "alpha": "" if sel is None else sel.alpha, "seed": "selected",
                           "value": "" if sel is None else sel.mean, "std": "" if sel is None else sel.std,
                           "inner_admissible": sel is not None})
    if sweep.no_admissible:
        logger.warning("no admissible alpha for %s", direction)
    ctx.emit(SweepSummaryRecord.of(sweep))


def _alpha_sweep(ctx: RunContext, exp, map_fn) -> None:
    t1, t2 = exp.tau1.build(), exp.tau2.build()
    _sweep_pair(ctx, exp, t1, t2, map_fn)
    if exp.both_directions:
        _sweep_pair(ctx, exp, t2, t1, map_fn)


def _model_study(ctx: RunContext, exp, map_fn) -> None:
    t1, t2 = exp.tau1.build(), exp.tau2.build()
    width, act = exp.width, exp.pi.activation
    hv = [ArchSpec(d, width, act) for d in exp.h_depths]
    gv = [ArchSpec(d, width, act) for d in exp.g_depths]
    triples = study_jobs(t1, t2, hv, gv, _base_config(exp), exp.seeds, exp.pi.to_arch(),
                         cfgmod.arch_or_none(exp.critic))
    jobs = [j for _, _, j in triples]
    extras = [{"space": s, "depth": a.label, "arch": a.full_label} for s, a, _ in triples]
    results = ctx.estimator_results(jobs, map_fn, extras)
    keyed = [(s, a, r) for (s, a, _), r in zip(triples, results) if r is not None]
    for cell in summarize_study(keyed):
        ctx.emit(StudyCellRecord(tau1=t1.name, tau2=t2.name, space=cell.space, depth=cell.depth,
                                 arch=cell.arch.full_label, mean=cell.mean, std=cell.std,
                                 admissible_rate=cell.admissible_rate, seeds=len(cell.results)))


def _audit(ctx: RunContext, exp, map_fn) -> None:
    if exp.family == "toy-cyclic":
        family, admissible = cfgmod.toy_cyclic_family()
    else:
        block = exp.gridworld or cfgmod.GridworldTask(env="gridworld")
        family = cfgmod.gridworld_rotation_family(block)
        admissible = {i: exp.admissible.build(t) for i, t in enumerate(family.tasks)}
    axioms = verify_space_axioms(family)
    ctx.emit(AuditRecord.of(partial_order_audit(family, admissible, axioms)))


def _calibrate_tasks(ctx: RunContext, exp, tasks: Sequence[TaskSpec], map_fn) -> list[TaskSpec | None]:
    config = _base_config(exp)
    args = [(t, exp.pi.to_arch(), config, exp.floor, cfgmod.arch_or_none(exp.critic)) for t in tasks]
    out: list[TaskSpec | None] = []
    for task, res in zip(tasks, map_fn(_calibrate_one, args)):
        if isinstance(res, JobFailure):
            ctx.error(res, None, task=task.name, stage="calibration")
            out.append(None)
            continue
        calibrated, rec = res
        ctx.emit(CalibrationRecord(**rec.to_dict()))
        out.append(calibrated)
    return out


def _calibrate(ctx: RunContext, exp, map_fn) -> None:
    _calibrate_tasks(ctx, exp, [b.build() for b in exp.tasks], map_fn)


def _pairwise(ctx: RunContext, exp, map_fn) -> None:
    tasks = [b.build() for b in exp.tasks]
    if exp.calibrate:
        tasks = [t for t in _calibrate_tasks(ctx, exp, tasks, map_fn) if t is not None]
    for i, t1 in enumerate(tasks):
        for j, t2 in enumerate(tasks):
            if i != j:
                _sweep_pair(ctx, exp, t1, t2, map_fn)


HANDLERS: dict[str, Callable] = {
    "check-reduction": _check_reduction,
    "exact-complexity": _exact_complexity,
    "estimate": _estimate,
    "alpha-sweep": _alpha_sweep,
    "model-study": _model_study,
    "audit": _audit,
    "calibrate": _calibrate,
    "pairwise": _pairwise,
}
# W9-END:handlers


# W9-BEGIN:run
@dataclass
class RunSummary:
    output: Path
    records: int
    errors: int
    manifest: dict

    @property
    def ok(self) -> bool:
        return self.errors == 0


def file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("taskreduce", "numpy", "pydantic", "PyYAML"):
        try:
            out[pkg] = version(pkg)
        except PackageNotFoundError:
            out[pkg] = None
    return out


def _write_sweep_csv(path: Path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow(row)


def run_experiment(exp, output: str | Path | None = None) -> RunSummary:
    """Execute a validated experiment and write its results under the output directory."""
    out_dir = Path(output or exp.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = cfgmod.experiment_digest(exp)
    logger.info("running %s (%s), digest %s, output %s", exp.name, exp.kind, digest, out_dir)
    t0 = time.perf_counter()
    results_path = out_dir / "results.jsonl"
    with RecordAppender(results_path) as appender, worker_map(exp.workers) as map_fn:
        ctx = RunContext(exp, out_dir, appender)
        try:
            HANDLERS[exp.kind](ctx, exp, map_fn)
        except TaskReduceError as e:
            ctx.error(JobFailure(type(e).__name__, str(e)), None, stage=exp.kind)
        records, errors = appender.count, appender.errors
    files = {"results.jsonl": file_sha256(results_path)}
    if ctx.sweep_rows:
        _write_sweep_csv(out_dir / "sweep.csv", ctx.sweep_rows)
        files["sweep.csv"] = file_sha256(out_dir / "sweep.csv")
    manifest = {
        "schema": 1,
        "experiment": exp.name,
        "kind": exp.kind,
        "config_digest": digest,
        "config": exp.model_dump(mode="json"),
        "seeds": list(exp.seeds),
        "workers": exp.workers,
        "versions": _versions(),
        "wall_seconds": round(time.perf_counter() - t0, 3),
        "records": records,
        "errors": errors,
        "files": files,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    logger.info("%s: %d records, %d errors", exp.name, records, errors)
    return RunSummary(out_dir, records, errors, manifest)

# W9-END:run


__all__ = ["RunSummary", "RunContext", "JobFailure", "run_experiment", "safe_run_job", "worker_map", "job_key",
           "HANDLERS", "SWEEP_COLUMNS", "CURVE_COLUMNS"]
