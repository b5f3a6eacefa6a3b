#!/usr/bin/env python3
"""
Determinism harness for taskreduce.

- Runs one experiment config N times into separate output directories.
- Hashes every produced results.jsonl (and sweep.csv when present) and asserts
  the digests agree across runs.
- Writes a JSON report (hashes, timings) to --out-dir and prints it.

Usage:
  python python/tools/determinism_harness.py configs/toy_exact.yaml --runs 3
"""
from __future__ import annotations
import argparse, hashlib, json, os, time
from dataclasses import dataclass, field, asdict
from pathlib import Path

try:
    from taskreduce.config import load_experiment
    from taskreduce.runner import run_experiment
except Exception as e:
    raise SystemExit(f"Failed to import taskreduce: {e}")

HASHED = ("results.jsonl", "sweep.csv")


@dataclass
class RunResult:
    output: str
    millis: float
    sha256: dict = field(default_factory=dict)
    errors: int = 0


def hash_outputs(out_dir: Path) -> dict:
    return {name: hashlib.sha256((out_dir / name).read_bytes()).hexdigest()
            for name in HASHED if (out_dir / name).exists()}


def run_once(config: str, overrides: list[str], out_dir: Path) -> RunResult:
    exp = load_experiment(config, overrides)
    t0 = time.perf_counter()
    summary = run_experiment(exp, out_dir)
    dt = (time.perf_counter() - t0) * 1000.0
    return RunResult(str(out_dir), dt, hash_outputs(out_dir), summary.errors)


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("config")
    ap.add_argument("--runs", type=int, default=3)
    ap.add_argument("-o", "--override", action="append", default=[])
    ap.add_argument("--out-dir", default="determinism_artifacts")
    args = ap.parse_args(argv)

    os.makedirs(args.out_dir, exist_ok=True)
    results = [run_once(args.config, args.override, Path(args.out_dir) / f"run{i}") for i in range(max(1, args.runs))]

    digests = [json.dumps(r.sha256, sort_keys=True) for r in results]
    unique = sorted(set(digests))
    report = {
        "config": args.config,
        "overrides": args.override,
        "runs": [asdict(r) for r in results],
        "unique": [json.loads(u) for u in unique],
        "all_equal": len(unique) == 1,
        "avg_ms": sum(r.millis for r in results) / max(1, len(results)),
    }

    rep_path = os.path.join(args.out_dir, "determinism_report.json")
    with open(rep_path, "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2)
    print(json.dumps(report, indent=2))

    if not report["all_equal"]:
        raise SystemExit("Determinism check FAILED: differing hashes")
    print("Determinism check OK")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
