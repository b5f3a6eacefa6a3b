import numpy as np
import pytest

from taskreduce.props import SUITES, random_task, run_props
from taskreduce.taskcore import enumerate_admissible


@pytest.mark.timeout(300)
@pytest.mark.parametrize("suite", SUITES)
def test_suite_passes(suite):
    report = run_props((suite,), seed=0, trials_scale=0.25)
    failures = [r.to_dict() for r in report.results if not r.passed]
    assert report.passed, failures
    assert report.results and all(r.suite == suite for r in report.results)


def test_same_seed_same_report():
    a = run_props(("taskcore",), seed=3, trials_scale=0.2).to_dict()
    b = run_props(("taskcore",), seed=3, trials_scale=0.2).to_dict()
    assert a == b


def test_random_task_at_full_slack_has_admissible_policies():
    task = random_task(np.random.default_rng(0), slack=1.0)
    assert task.success_threshold > 0.0
    assert enumerate_admissible(task)
