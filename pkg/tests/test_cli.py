import json
from pathlib import Path

import pytest

from taskreduce import cli, props
from taskreduce.config import OUTPUT_ENV

ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(autouse=True)
def no_output_env(monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)


def last_json(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


def test_validate_ok(capsys):
    assert cli.main(["validate", str(ROOT / "configs" / "toy_exact.yaml")]) == cli.EXIT_OK
    report = last_json(capsys)
    assert report["ok"] and report["kind"] == "exact-complexity" and len(report["config_digest"]) == 16


def test_validate_reports_field_and_line(capsys):
    code = cli.main(["validate", str(ROOT / "configs" / "toy_estimate.yaml"), "-o", "estimator.lr_policy=-1"])
    assert code == cli.EXIT_VALIDATION
    report = last_json(capsys)
    assert not report["ok"]
    (diag,) = report["diagnostics"]
    assert diag["field"] == "estimator.lr_policy" and diag["line"] is not None


def test_missing_file_is_a_validation_failure(tmp_path, capsys):
    assert cli.main(["validate", str(tmp_path / "absent.yaml")]) == cli.EXIT_VALIDATION
    assert not last_json(capsys)["ok"]


def test_run_writes_results(tmp_path, capsys):
    code = cli.main(["run", str(ROOT / "configs" / "toy_exact.yaml"), "--output", str(tmp_path / "out")])
    assert code == cli.EXIT_OK
    report = last_json(capsys)
    assert report["records"] == 1 and report["errors"] == 0
    assert (tmp_path / "out" / "results.jsonl").exists()


def test_run_with_error_records_exits_compute(tmp_path, capsys):
    code = cli.main(["run", str(ROOT / "configs" / "toy_exact.yaml"), "--output", str(tmp_path / "out"),
                     "-o", "admissible.cap=1"])
    assert code == cli.EXIT_COMPUTE
    assert last_json(capsys)["errors"] == 1


def test_plot_data(tmp_path, capsys):
    cli.main(["run", str(ROOT / "configs" / "toy_exact.yaml"), "--output", str(tmp_path / "out")])
    capsys.readouterr()
    out = tmp_path / "fig2.csv"
    code = cli.main(["plot-data", str(tmp_path / "out" / "results.jsonl"), "--figure", "fig2", "--out", str(out)])
    assert code == cli.EXIT_OK
    report = last_json(capsys)
    assert report["columns"] == ["alpha", "mean_C", "std_C", "direction"]
    assert out.read_text().splitlines()[0] == "alpha,mean_C,std_C,direction"


class TestProps:
    @pytest.mark.timeout(120)
    def test_suite_passes(self, capsys):
        assert cli.main(["props", "--suite", "taskcore", "--scale", "0.2"]) == cli.EXIT_OK
        report = last_json(capsys)
        assert report["passed"] and {p["suite"] for p in report["properties"]} == {"taskcore"}

    def test_failing_property_exits_3(self, capsys, monkeypatch):
        def broken(rng):
            raise AssertionError("always")

        monkeypatch.setattr(props, "_REGISTRY", [props.Property("broken", "taskcore", broken, 3)])
        assert cli.main(["props", "--suite", "taskcore"]) == cli.EXIT_PROPS
        (entry,) = last_json(capsys)["properties"]
        assert entry["failure"] == "trial 0: always"
