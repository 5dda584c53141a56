"""Small numerical helpers shared by several modules."""

from __future__ import annotations

import math

import numpy as np

from .errors import ValidationError

REPORT_SCHEMA = "riesz-report/1"


def loglog_fit(x, y):
    """Least-squares slope/intercept of log(y) against log(x).

    Returns (slope, intercept, residual) where residual is the RMS of the
    fit residuals in log space.
    """
    lx = np.log(np.asarray(x, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lx.size < 2:
        raise ValidationError("need at least 2 points for a log-log fit")
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    res = ly - (slope * lx + intercept)
    return slope, intercept, float(np.sqrt(np.mean(res * res)))


def geometric_grid(lo: float, hi: float, ratio: float) -> np.ndarray:
    """Geometric grid lo, lo*ratio, ... capped at hi (hi always included)."""
    if not (ratio > 1.0):
        raise ValidationError("grid ratio must be > 1")
    if not (0 < lo <= hi):
        raise ValidationError("need 0 < lo <= hi")
    pts = [lo]
    while pts[-1] * ratio < hi * (1 - 1e-12):
        pts.append(pts[-1] * ratio)
    if pts[-1] < hi:
        pts.append(hi)
    return np.array(pts)


def adaptive_simpson(f, a: float, b: float, rel_tol: float = 1e-10,
                     max_depth: int = 40) -> float:
    """Deterministic adaptive Simpson quadrature of f on [a, b]."""

    def simpson(lo, flo, mid, fmid, hi, fhi):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, flo, mid, fmid, hi, fhi, whole, tol, depth):
        lmid = 0.5 * (lo + mid)
        rmid = 0.5 * (mid + hi)
        flm = f(lmid)
        frm = f(rmid)
        left = simpson(lo, flo, lmid, flm, mid, fmid)
        right = simpson(mid, fmid, rmid, frm, hi, fhi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, flo, lmid, flm, mid, fmid, left, tol / 2, depth - 1)
                + recurse(mid, fmid, rmid, frm, hi, fhi, right, tol / 2, depth - 1))

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = simpson(a, fa, m, fm, b, fb)
    scale = max(abs(whole), 1e-300)
    return recurse(a, fa, m, fm, b, fb, whole, rel_tol * scale, max_depth)


def primes_up_to(n: int) -> np.ndarray:
    """All primes <= n via a boolean Eratosthenes sieve."""
    if n < 2:
        return np.array([], dtype=np.int64)
    mask = np.ones(n + 1, dtype=bool)
    mask[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if mask[p]:
            mask[p * p:: p] = False
    return np.nonzero(mask)[0].astype(np.int64)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = 0xCBF29CE484222325
    prime = 0x100000001B3
    mask = 0xFFFFFFFFFFFFFFFF
    for b in data:
        h = ((h ^ b) * prime) & mask
    return h
