import json

import pytest
from pydantic import ValidationError

from taskreduce.complexity import exact_relative_complexity, recompute
from taskreduce.envs import toy
from taskreduce.errors import ConfigurationError
from taskreduce.reduction import FunctionSpace, check_reduction
from taskreduce.records import (
    SCHEMA,
    ComplexityRecord,
    ErrorRecord,
    RecordAppender,
    ReductionRecord,
    SweepPointSummary,
    SweepSummaryRecord,
    dump_record,
    parse_record,
    read_records,
)
from taskreduce.taskcore import enumerate_admissible


@pytest.fixture(scope="module")
def oracle():
    tau1, tau2 = toy.oracle_pair()
    H = FunctionSpace.identity(tau1.observations, "encoder")
    G = FunctionSpace.identity(tau2.actions, "decoder")
    return tau1, tau2, H, G, enumerate_admissible(tau2)


def test_lines_are_sorted_compact_json():
    line = dump_record(ErrorRecord(error_type="TrainingError", message="boom", job=3))
    data = json.loads(line)
    assert list(data) == sorted(data)
    assert data["schema"] == SCHEMA and data["record"] == "error"
    assert " " not in line.replace("TrainingError", "")


def test_unknown_record_type_is_rejected():
    with pytest.raises(ValidationError):
        parse_record({"record": "mystery", "schema": 1})
    with pytest.raises(ValidationError):
        parse_record({"record": "error", "schema": 2, "error_type": "X", "message": ""})


class TestComplexityRecord:
    def test_from_exact_result(self, oracle):
        tau1, tau2, H, G, adm = oracle
        rec = ComplexityRecord.of(exact_relative_complexity(tau1, tau2, H, G, adm), tau1, tau2, job=0)
        assert rec.value == pytest.approx(0.5) and rec.method == "exact"
        assert rec.task_digests == [tau1.digest, tau2.digest]
        assert isinstance(parse_record(dump_record(rec)), ComplexityRecord)

    def test_attaining_triple_survives_serialization(self, oracle):
        tau1, tau2, H, G, adm = oracle
        rec = ComplexityRecord.of(exact_relative_complexity(tau1, tau2, H, G, adm), tau1, tau2, job=0)
        back = parse_record(dump_record(rec)).to_result(tau1, tau2)
        assert recompute(tau1, back) == pytest.approx(back.value)

    def test_rejects_other_tasks(self, oracle):
        tau1, tau2, H, G, adm = oracle
        rec = ComplexityRecord.of(exact_relative_complexity(tau1, tau2, H, G, adm), tau1, tau2, job=0)
        with pytest.raises(ConfigurationError, match="different tasks"):
            rec.to_result(tau2, tau1)


def test_reduction_record_keeps_counterexample(oracle):
    tau1, tau2, H, G, adm = oracle
    verdict = check_reduction(tau1, tau2, H, G, adm)
    rec = ReductionRecord.of(verdict, tau1, tau2)
    assert rec.holds is False
    assert rec.counterexample is not None and rec.counterexample_index is not None


def test_sweep_summary_selected_point():
    pts = [SweepPointSummary(alpha=a, mean=m, std=0.0, admissible_rate=r, seeds=2)
           for a, m, r in ((0.0, 0.1, 1.0), (1.0, 0.4, 1.0), (10.0, 0.9, 0.5))]
    rec = SweepSummaryRecord(tau1="a", tau2="b", selected_alpha=1.0, no_admissible=False, points=pts)
    assert rec.selected.mean == 0.4
    assert SweepSummaryRecord(tau1="a", tau2="b", selected_alpha=None, no_admissible=True, points=pts).selected is None


class TestAppender:
    def test_counts_records_and_errors(self, tmp_path):
        path = tmp_path / "deep" / "results.jsonl"
        with RecordAppender(path) as app:
            app.append(ErrorRecord(error_type="X", message="a"))
            app.append(SweepSummaryRecord(tau1="a", tau2="b", selected_alpha=None, no_admissible=True, points=[]))
        assert (app.count, app.errors) == (2, 1)
        kinds = [type(r).__name__ for r in read_records(path)]
        assert kinds == ["ErrorRecord", "SweepSummaryRecord"]

    def test_append_mode_keeps_existing_lines(self, tmp_path):
        path = tmp_path / "r.jsonl"
        for _ in range(2):
            with RecordAppender(path, mode="a") as app:
                app.append(ErrorRecord(error_type="X", message="a"))
        assert len(list(read_records(path))) == 2
