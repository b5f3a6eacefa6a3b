import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent


@pytest.mark.timeout(120)
def test_exact_run_is_byte_identical(tmp_path):
    env = {**os.environ, "PYTHONPATH": os.pathsep.join([str(ROOT / "python"), os.environ.get("PYTHONPATH", "")])}
    env.pop("TR_OUTPUT_DIR", None)
    subprocess.check_call([
        sys.executable, "python/tools/determinism_harness.py", "configs/toy_exact.yaml",
        "--runs", "3", "--out-dir", str(tmp_path),
    ], cwd=ROOT, env=env)
    rep = json.loads((tmp_path / "determinism_report.json").read_text())
    assert rep["all_equal"] and len(rep["runs"]) == 3
    assert all(r["errors"] == 0 and "results.jsonl" in r["sha256"] for r in rep["runs"])
