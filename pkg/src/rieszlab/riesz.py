"""Exact Riesz means of coefficient tables and error-exponent measurement.

S_k(x) = sum_{m<=x} a(m) (1 - m/x)^k / k!; the weight is computed as
((x - m)/x)^k so that the k = 1 averaging identity holds bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .coeffs import CoeffTable
from .errors import ValidationError
from .util import loglog_fit


@dataclass(frozen=True)
class RieszReport:
    k: int
    x_grid: np.ndarray
    smoothed: np.ndarray
    main_terms: np.ndarray
    errors: np.ndarray
    fitted_exponent: float
    C_used: float
    C_source: str = ""


class ThresholdKind(Enum):
    NEW = "new"
    OLD = "old"


def riesz_mean(t: CoeffTable, x: float, k: int) -> float:
    """Direct summation of the k-th Riesz mean at x (k = 0: plain partial sum)."""
    if not (1.0 <= x <= t.cutoff):
        raise ValidationError(f"x={x} outside table range [1, {t.cutoff}]")
    if k < 0:
        raise ValidationError("k must be >= 0")
    M = int(math.floor(x))
    a = t.values[:M]
    if k == 0:
        return float(np.sum(a))
    m = np.arange(1, M + 1, dtype=np.float64)
    w = (x - m) / x
    return float(np.sum(a * w ** k)) / math.factorial(k)


def main_term(C: float, x: float, k: int) -> float:
    """C * x / (k+1)!."""
    if k < 0:
        raise ValidationError("k must be >= 0")
    return C * x / math.factorial(k + 1)


def exponent_fit(x_grid: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log|error| vs log x; near-zero points dropped."""
    x = np.asarray(x_grid, dtype=float)
    e = np.abs(np.asarray(errors, dtype=float))
    if x.size < 6:
        raise ValidationError("grid length must be >= 6")
    keep = e > 1e-13
    if keep.sum() < 4:
        raise ValidationError("fewer than 4 points above the 1e-13 floor")
    slope, _, _ = loglog_fit(x[keep], e[keep])
    return slope


def k_threshold(n: int, which: ThresholdKind) -> int:
    """Smallest admissible Riesz order for the degree-n standard L-function."""
    if n < 2:
        raise ValidationError("n must be >= 2")
    if which is ThresholdKind.NEW:
        return n * n // 2 + 1
    if which is ThresholdKind.OLD:
        return n * n * (n + 1) // 2 + n
    raise ValidationError(f"unknown threshold kind {which}")


def riesz_report(t: CoeffTable, k: int, x_grid: Sequence[float], C: float, *,
                 C_source: str = "") -> RieszReport:
    """Smoothed sums, main terms and fitted error exponent over a grid."""
    x = np.asarray(x_grid, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ValidationError("x_grid must be strictly increasing")
    smoothed = np.array([riesz_mean(t, xv, k) for xv in x])
    mains = np.array([main_term(C, xv, k) for xv in x])
    errors = smoothed - mains
    try:
        slope = exponent_fit(x, errors)
    except ValidationError:
        slope = float("nan")
    return RieszReport(k=k, x_grid=x, smoothed=smoothed, main_terms=mains,
                      errors=errors, fitted_exponent=slope, C_used=C,
                      C_source=C_source)
