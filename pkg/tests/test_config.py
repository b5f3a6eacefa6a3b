import textwrap
from pathlib import Path

import pytest

from taskreduce.config import (
    OUTPUT_ENV,
    ConfigValidationError,
    SpaceBlock,
    apply_overrides,
    experiment_digest,
    load_experiment,
    parse_override,
    validate_data,
)
from taskreduce.errors import ConfigurationError
from taskreduce.taskcore import FiniteSpace

CONFIGS = sorted((Path(__file__).resolve().parent.parent / "configs").glob("*.yaml"))

ESTIMATE = """\
name: t
kind: estimate
tau1: {env: toy, name: oracle-1}
tau2: {env: toy, name: oracle-2}
estimator:
  alpha: 1.0
  lr_policy: {lr}
"""


@pytest.fixture(autouse=True)
def no_output_env(monkeypatch):
    monkeypatch.delenv(OUTPUT_ENV, raising=False)


def write(tmp_path, text, name="exp.yaml") -> Path:
    p = tmp_path / name
    p.write_text(textwrap.dedent(text), encoding="utf-8")
    return p


def fields(err: ConfigValidationError) -> dict[str, dict]:
    return {d["field"]: d for d in err.diagnostics}


@pytest.mark.parametrize("path", CONFIGS, ids=lambda p: p.name)
def test_shipped_configs_validate(path):
    exp = load_experiment(path)
    assert exp.name and exp.kind


class TestDiagnostics:
    def test_negative_learning_rate_names_field_and_line(self, tmp_path):
        with pytest.raises(ConfigValidationError) as info:
            load_experiment(write(tmp_path, ESTIMATE.format(lr=-0.01)))
        diag = fields(info.value)["estimator.lr_policy"]
        assert diag["line"] == 7
        assert "greater than 0" in diag["message"]
        assert "exp.yaml:7: estimator.lr_policy" in str(info.value)

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigValidationError) as info:
            load_experiment(write(tmp_path, ESTIMATE.format(lr=0.01) + "bogus: 1\n"))
        diag = fields(info.value)["bogus"]
        assert diag["line"] == 8 and "Extra inputs" in diag["message"]

    def test_unknown_key_inside_task(self, tmp_path):
        text = ESTIMATE.format(lr=0.01).replace("name: oracle-1}", "name: oracle-1, size: 3}")
        with pytest.raises(ConfigValidationError) as info:
            load_experiment(write(tmp_path, text))
        assert fields(info.value)["tau1.size"]["line"] == 3

    def test_unknown_kind(self):
        with pytest.raises(ConfigValidationError, match="kind"):
            validate_data({"kind": "train-everything"})

    def test_missing_required_task(self):
        with pytest.raises(ConfigValidationError) as info:
            validate_data({"kind": "exact-complexity", "tau1": {"env": "toy", "name": "coin"}})
        assert "tau2" in fields(info.value)

    def test_alphas_must_ascend(self):
        data = {"kind": "alpha-sweep", "tau1": {"env": "cartpole"}, "tau2": {"env": "cartpole", "direction": "down"},
                "alphas": [1.0, 0.5]}
        with pytest.raises(ConfigValidationError, match="sorted ascending"):
            validate_data(data)

    def test_one_shot_needs_rewards(self):
        with pytest.raises(ConfigValidationError, match="rewards matrix"):
            validate_data({"kind": "exact-complexity", "tau1": {"env": "toy", "name": "one-shot"},
                           "tau2": {"env": "toy", "name": "coin"}})

    def test_yaml_syntax_error(self, tmp_path):
        with pytest.raises(ConfigValidationError) as info:
            load_experiment(write(tmp_path, "name: [unclosed\nkind: audit\n"))
        assert info.value.diagnostics[0]["field"] == "<document>"
        assert info.value.diagnostics[0]["line"] is not None

    def test_top_level_must_be_mapping(self, tmp_path):
        with pytest.raises(ConfigValidationError, match="top level must be a mapping"):
            load_experiment(write(tmp_path, "- 1\n- 2\n"))

    def test_is_a_configuration_error(self):
        assert issubclass(ConfigValidationError, ConfigurationError)


class TestOverrides:
    def test_parse_yaml_scalars(self):
        assert parse_override("estimator.alpha=2.5") == (["estimator", "alpha"], 2.5)
        assert parse_override("seeds=[3, 4]") == (["seeds"], [3, 4])
        assert parse_override("h.depth=null") == (["h", "depth"], None)

    def test_malformed(self):
        with pytest.raises(ConfigurationError, match="key.path=value"):
            parse_override("alpha")

    def test_applied_before_validation(self, tmp_path):
        exp = load_experiment(write(tmp_path, ESTIMATE.format(lr=0.01)), ["estimator.alpha=2.5", "seeds=[3, 4]"])
        assert exp.estimator.alpha == 2.5 and exp.seeds == [3, 4]
        with pytest.raises(ConfigValidationError) as info:
            load_experiment(write(tmp_path, ESTIMATE.format(lr=0.01)), ["estimator.lr_policy=0"])
        assert "estimator.lr_policy" in fields(info.value)

    def test_original_mapping_untouched(self):
        data = {"estimator": {"alpha": 1.0}}
        apply_overrides(data, ["estimator.alpha=3"])
        assert data == {"estimator": {"alpha": 1.0}}

    def test_lists_are_not_indexed(self):
        with pytest.raises(ConfigurationError, match="indexes into a list"):
            apply_overrides({"tasks": [{"env": "toy"}]}, ["tasks.0.env=cartpole"])

    def test_output_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "elsewhere"))
        exp = load_experiment(write(tmp_path, ESTIMATE.format(lr=0.01)))
        assert exp.output == str(tmp_path / "elsewhere")


def test_digest_ignores_output_and_workers(tmp_path):
    p = write(tmp_path, ESTIMATE.format(lr=0.01))
    a = load_experiment(p)
    b = load_experiment(p, ["output=other", "workers=4"])
    c = load_experiment(p, ["estimator.alpha=2"])
    assert experiment_digest(a) == experiment_digest(b) != experiment_digest(c)


class TestSpaceBlock:
    def test_identity_between_equal_spaces(self):
        sp = FiniteSpace(3)
        H = SpaceBlock(kind="identity").build(sp, sp, "encoder")
        assert H.has_identity() and len(H) == 1

    def test_all_functions(self):
        G = SpaceBlock(kind="all").build(FiniteSpace(2), FiniteSpace(3), "decoder")
        assert len(G) == 9

    def test_rotation_subset(self):
        H = SpaceBlock(kind="rotation", ks=[1]).build(FiniteSpace(4), FiniteSpace(4), "decoder")
        assert [m.params["k"] for m in H] == [1] and not H.contains_identity
