"""
End-to-end runs of validated experiments into a temporary output directory.
"""
import csv
import json
import pickle

import pytest

from taskreduce.advest import EstimateJob
from taskreduce.config import validate_data
from taskreduce.records import AuditRecord, ComplexityRecord, ErrorRecord, ReductionRecord, read_records
from taskreduce.runner import CURVE_COLUMNS, HANDLERS, SWEEP_COLUMNS, file_sha256, run_experiment

ORACLE = {"tau1": {"env": "toy", "name": "oracle-1"}, "tau2": {"env": "toy", "name": "oracle-2"}}
TINY_ESTIMATOR = {"max_iters": 6, "batch_size": 8, "replay_capacity": 64, "eval_every": 3, "eval_rollouts": 2,
                  "train_eval_rollouts": 1, "steps_per_iter": 2, "convergence_window": 2}


def run(tmp_path, data, name="out"):
    exp = validate_data({"name": "t", **data})
    summary = run_experiment(exp, tmp_path / name)
    return summary, list(read_records(summary.output / "results.jsonl"))


def test_every_kind_has_a_handler():
    assert set(HANDLERS) == {"check-reduction", "exact-complexity", "estimate", "alpha-sweep", "model-study",
                             "audit", "calibrate", "pairwise"}


class TestExactKinds:
    def test_exact_complexity(self, tmp_path):
        summary, records = run(tmp_path, {"kind": "exact-complexity", **ORACLE})
        assert summary.ok and summary.records == 1
        (rec,) = records
        assert isinstance(rec, ComplexityRecord) and rec.experiment == "t"
        assert rec.value == pytest.approx(0.5)
        assert rec.metadata["consistent"] is True and rec.metadata["reduction_holds"] is False

    def test_check_reduction_with_equivalence(self, tmp_path):
        data = {"kind": "check-reduction", "equivalence": True,
                "tau1": {"env": "gridworld", "goal_dir": "E", "n": 1},
                "tau2": {"env": "gridworld", "goal_dir": "N", "n": 1},
                "encoders": {"kind": "rotation", "ks": [1, 3]}, "decoders": {"kind": "rotation", "ks": [1, 3]},
                "admissible": {"source": "gridworld", "random_count": 16},
                "admissible1": {"source": "gridworld", "random_count": 16}}
        summary, (rec,) = run(tmp_path, data)
        assert summary.ok and isinstance(rec, ReductionRecord)
        assert rec.holds is True and rec.quantified > 0 and rec.counterexample is None
        assert rec.equivalent is True

    def test_cyclic_audit(self, tmp_path):
        summary, (rec,) = run(tmp_path, {"kind": "audit", "family": "toy-cyclic"})
        assert isinstance(rec, AuditRecord) and rec.passed
        assert all(all(row) for row in rec.reduces)

    @pytest.mark.timeout(120)
    def test_gridworld_audit_passes(self, tmp_path):
        data = {"kind": "audit", "gridworld": {"env": "gridworld", "n": 1},
                "admissible": {"source": "gridworld", "random_count": 8}}
        summary, (rec,) = run(tmp_path, data)
        assert summary.ok and rec.passed
        assert rec.tasks == ["grid-N-n1-m0", "grid-E-n1-m0", "grid-S-n1-m0", "grid-W-n1-m0"]
        assert all(rec.checks[name]["passed"] for name in rec.checks)

    def test_results_are_byte_identical_across_runs(self, tmp_path):
        data = {"kind": "exact-complexity", **ORACLE}
        a, _ = run(tmp_path, data, "a")
        b, _ = run(tmp_path, data, "b")
        assert file_sha256(a.output / "results.jsonl") == file_sha256(b.output / "results.jsonl")
        assert a.manifest["files"] == b.manifest["files"]


def test_manifest(tmp_path):
    summary, _ = run(tmp_path, {"kind": "exact-complexity", **ORACLE, "seeds": [7]})
    manifest = json.loads((summary.output / "manifest.json").read_text())
    assert manifest == summary.manifest
    assert manifest["seeds"] == [7] and manifest["kind"] == "exact-complexity"
    assert len(manifest["config_digest"]) == 16
    assert manifest["files"]["results.jsonl"] == file_sha256(summary.output / "results.jsonl")
    assert "numpy" in manifest["versions"]


def test_compute_failure_becomes_error_record(tmp_path):
    data = {"kind": "exact-complexity", **ORACLE, "admissible": {"cap": 1}}
    summary, records = run(tmp_path, data)
    assert not summary.ok and summary.errors == 1
    assert isinstance(records[-1], ErrorRecord)
    assert records[-1].context["stage"] == "exact-complexity"


@pytest.mark.timeout(120)
def test_short_sweep_writes_csv_and_curves(tmp_path):
    data = {"kind": "alpha-sweep", **ORACLE, "alphas": [0.0, 1.0], "seeds": [0],
            "h": {"depth": None}, "g": {"depth": None}, "pi": {"depth": 1, "width": 8},
            "critic": {"depth": 1, "width": 8}, "estimator": TINY_ESTIMATOR}
    summary, records = run(tmp_path, data)
    assert summary.ok
    assert sum(isinstance(r, ComplexityRecord) for r in records) == 2
    with open(summary.output / "sweep.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert [r["seed"] for r in rows] == ["0", "0", "selected"]
    curves = sorted((summary.output / "curves").glob("*.csv"))
    assert len(curves) == 2
    with open(curves[0], newline="") as f:
        assert tuple(next(csv.reader(f))) == CURVE_COLUMNS
    assert len(list((summary.output / "checkpoints").glob("*.json"))) == 2


def test_estimate_job_is_picklable():
    exp = validate_data({"name": "t", "kind": "estimate", **ORACLE})
    job = EstimateJob(exp.tau1.build(), exp.tau2.build(), exp.h.to_arch(), exp.g.to_arch(), exp.pi.to_arch(), None,
                      exp.estimator.to_config(0))
    assert pickle.loads(pickle.dumps(job)).tau1.digest == job.tau1.digest
