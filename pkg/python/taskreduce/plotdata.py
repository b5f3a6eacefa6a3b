"""
CSV emitters shaping result records to the three figure layouts.

Column orders are fixed:
  fig2  alpha, mean_C, std_C, direction          (one row per direction x alpha)
  fig3  space, depth, mean_C, std_C, direction   (one row per H/G depth)
  fig4  tau1, tau2, mean_C, std_C                (selected alpha per ordered pair)

std_C is the population standard deviation, so a single seed gives 0. Cells
with no usable result are written with empty mean/std and reported as warnings.
"""
from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .records import ComplexityRecord, SweepSummaryRecord, read_records

logger = logging.getLogger(__name__)

Figure = Literal["fig2", "fig3", "fig4"]
COLUMNS: dict[str, tuple[str, ...]] = {
    "fig2": ("alpha", "mean_C", "std_C", "direction"),
    "fig3": ("space", "depth", "mean_C", "std_C", "direction"),
    "fig4": ("tau1", "tau2", "mean_C", "std_C"),
}
_DEPTH_ORDER = {"identity": -1}


def _stats(values: Sequence[float]) -> tuple[float | str, float | str]:
    if not values:
        return "", ""
    v = np.asarray(values, dtype=np.float64)
    return float(v.mean()), float(v.std())


def load(paths: Iterable[str | Path]) -> list:
    return [rec for p in paths for rec in read_records(p)]


def fig2_rows(records: Sequence) -> tuple[list[dict], list[str]]:
    cells: dict[str, dict[float, list[float]]] = {}
    for r in records:
        if isinstance(r, ComplexityRecord) and r.alpha is not None and r.space is None:
            cells.setdefault(f"{r.tau1}/{r.tau2}", {}).setdefault(r.alpha, []).append(r.value)
    alphas = sorted({a for by_alpha in cells.values() for a in by_alpha})
    rows, warnings = [], []
    for direction in sorted(cells):
        for a in alphas:
            vals = cells[direction].get(a, [])
            if not vals:
                warnings.append(f"missing cell: direction={direction} alpha={a:g}")
            mean, std = _stats(vals)
            rows.append({"alpha": a, "mean_C": mean, "std_C": std, "direction": direction})
    return rows, warnings


def fig3_rows(records: Sequence) -> tuple[list[dict], list[str]]:
    cells: dict[tuple[str, str], dict[str, list[float]]] = {}
    for r in records:
        if isinstance(r, ComplexityRecord) and r.space is not None:
            cells.setdefault((f"{r.tau1}/{r.tau2}", r.space), {}).setdefault(r.depth, []).append(r.value)
    depths = sorted({d for by_depth in cells.values() for d in by_depth},
                    key=lambda d: _DEPTH_ORDER.get(d, int(d) if d.isdigit() else 1 << 30))
    rows, warnings = [], []
    for (direction, space) in sorted(cells):
        for d in depths:
            vals = cells[(direction, space)].get(d, [])
            if not vals:
                warnings.append(f"missing cell: direction={direction} space={space} depth={d}")
            mean, std = _stats(vals)
            rows.append({"space": space, "depth": d, "mean_C": mean, "std_C": std, "direction": direction})
    return rows, warnings


def fig4_rows(records: Sequence) -> tuple[list[dict], list[str]]:
    rows, warnings = [], []
    for r in records:
        if not isinstance(r, SweepSummaryRecord):
            continue
        sel = r.selected
        if sel is None:
            warnings.append(f"missing cell: {r.tau1}/{r.tau2} has no admissible alpha")
            rows.append({"tau1": r.tau1, "tau2": r.tau2, "mean_C": "", "std_C": ""})
        else:
            rows.append({"tau1": r.tau1, "tau2": r.tau2, "mean_C": sel.mean, "std_C": sel.std})
    rows.sort(key=lambda row: (row["tau1"], row["tau2"]))
    return rows, warnings


_ROWS = {"fig2": fig2_rows, "fig3": fig3_rows, "fig4": fig4_rows}


def emit_plot_data(result_paths: Iterable[str | Path], figure: Figure, out: str | Path) -> list[str]:
    """Write the figure CSV to `out`; returns the warning list."""
    rows, warnings = _ROWS[figure](load(result_paths))
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=COLUMNS[figure])
        w.writeheader()
        w.writerows(rows)
    for msg in warnings:
        logger.warning(msg)
    return warnings


__all__ = ["COLUMNS", "emit_plot_data", "fig2_rows", "fig3_rows", "fig4_rows", "load"]
