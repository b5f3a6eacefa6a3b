# W0-BEGIN:validate
from __future__ import annotations

import math

import numpy as np

from .errors import ConfigurationError

ROW_SUM_TOL = 1e-12


def _as_int(name: str, v) -> int:
    if isinstance(v, bool):
        raise ConfigurationError(f"{name} must be an integer, got bool")
    try:
        i = int(v)
    except Exception as e:
        raise ConfigurationError(f"{name} must be an integer, got {type(v).__name__}") from e
    if i != v:
        raise ConfigurationError(f"{name} must be an integer, got {v!r}")
    return i


def positive_int(name: str, v) -> int:
    i = _as_int(name, v)
    if i < 1:
        raise ConfigurationError(f"{name} must be >= 1")
    return i


def nonneg_int(name: str, v) -> int:
    i = _as_int(name, v)
    if i < 0:
        raise ConfigurationError(f"{name} must be >= 0")
    return i


def finite_real(name: str, v) -> float:
    try:
        x = float(v)
    except Exception as e:
        raise ConfigurationError(f"{name} must be a real number, got {type(v).__name__}") from e
    if not math.isfinite(x):
        raise ConfigurationError(f"{name} must be finite")
    return x


def positive_real(name: str, v) -> float:
    x = finite_real(name, v)
    if x <= 0.0:
        raise ConfigurationError(f"{name} must be finite and > 0")
    return x


def nonneg_real(name: str, v) -> float:
    x = finite_real(name, v)
    if x < 0.0:
        raise ConfigurationError(f"{name} must be finite and >= 0")
    return x


def probability_rows(name: str, a, shape_tail: int | None = None) -> np.ndarray:
    """Return `a` as float64 with every last-axis row summing to 1 within ROW_SUM_TOL."""
    arr = np.array(a, dtype=np.float64)
    if shape_tail is not None and arr.shape[-1] != shape_tail:
        raise ConfigurationError(f"{name} last axis must have length {shape_tail}, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
        raise ConfigurationError(f"{name} entries must be finite and >= 0")
    sums = arr.sum(axis=-1)
    if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
        bad = np.argwhere(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
        raise ConfigurationError(f"{name} row {tuple(int(i) for i in bad)} sums to {float(sums[tuple(bad)])!r}, not 1")
    return arr
# W0-END:validate
