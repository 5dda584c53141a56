"""Zeta and shifted-zeta-product evaluation, residues, growth scans.

Everything here rests on an Euler-Maclaurin evaluator for zeta(s) that is
valid on both sides of the critical strip at desk-scale heights.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .coeffs import LSeriesSpec
from .errors import NumericalContractError, PoleCollisionError, ValidationError
from .testbeds import DEFAULT_TAU_CAP, hecke_normalized
from .util import loglog_fit, primes_up_to

# B_2, B_4, ..., B_26
_BERNOULLI = [
    1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730,
    7.0 / 6, -3617.0 / 510, 43867.0 / 798, -174611.0 / 330,
    854513.0 / 138, -236364091.0 / 2730, 8553103.0 / 6,
]


@dataclass(frozen=True)
class EvalResult:
    value: complex
    abs_error_estimate: float


@dataclass(frozen=True)
class GrowthFit:
    sigma: float
    t_grid: np.ndarray
    measured_exponent: float
    reference_exponent: float
    epsilon_used: float
    intercept: float = 0.0
    residual: float = 0.0


def zeta_em(s: complex, N: int, M: int) -> EvalResult:
    """Euler-Maclaurin evaluation of zeta(s) with N direct terms, M corrections.

    zeta(s) = sum_{k<=N} k^-s + N^(1-s)/(s-1) - N^-s/2
              + sum_{j<=M} B_2j/(2j)! * (s)(s+1)...(s+2j-2) * N^(-s-2j+1)

    The error estimate is the magnitude of the first omitted correction.
    """
    s = complex(s)
    if abs(s - 1.0) < 1e-12:
        raise PoleCollisionError("zeta pole at s = 1")
    if N < 2:
        raise ValidationError("N must be >= 2")
    if not (0 <= M <= 12):
        raise ValidationError("M must be in [0, 12]")
    k = np.arange(1, N + 1, dtype=np.float64)
    terms = np.exp(-s * np.log(k))
    direct = np.sum(terms)
    abs_sum = float(np.sum(np.abs(terms)))
    lnN = math.log(N)
    val = direct + cmath.exp((1 - s) * lnN) / (s - 1) - 0.5 * cmath.exp(-s * lnN)
    rising = s  # (s)(s+1)...(s+2j-2), built incrementally
    fact = 1.0
    term = 0.0
    for j in range(1, M + 2):
        two_j = 2 * j
        fact *= (two_j - 1) * two_j
        term = (_BERNOULLI[j - 1] / fact) * rising * cmath.exp((-s - two_j + 1) * lnN)
        if j <= M:
            val += term
        rising *= (s + two_j - 1) * (s + two_j)
    # first omitted correction (j = M + 1) plus a pairwise-summation
    # rounding model for the direct sum
    err = abs(term) + 2.3e-16 * (math.log2(N) + 4.0) * abs_sum
    if not (math.isfinite(val.real) and math.isfinite(val.imag)):
        raise NumericalContractError(f"zeta_em diverged at s={s} (N={N}, M={M})")
    return EvalResult(value=complex(val), abs_error_estimate=err)


def zeta_auto(s: complex) -> EvalResult:
    """zeta(s) with auto-selected Euler-Maclaurin parameters."""
    N = max(20, int(math.ceil(2 * abs(complex(s).imag))))
    return zeta_em(s, N, 8)


def lfun_eval(spec: LSeriesSpec, s: complex) -> EvalResult:
    """Product of shifted zetas: L(s) = prod_i zeta(s - l_i)."""
    if spec.shifts is None:
        raise ValidationError(f"spec {spec.label} has no shift decomposition")
    s = complex(s)
    vals = []
    errs = []
    for lam in spec.shifts:
        if abs(s - (1 + lam)) < 1e-8:
            raise PoleCollisionError(f"s={s} within 1e-8 of pole at {1 + lam}")
        r = zeta_auto(s - lam)
        vals.append(r.value)
        errs.append(r.abs_error_estimate)
    prod = complex(np.prod(vals))
    # first-order propagation: d(prod)/prod = sum d(v_i)/v_i
    err = sum(abs(prod) / max(abs(v), 1e-300) * e for v, e in zip(vals, errs))
    return EvalResult(value=prod, abs_error_estimate=err)


class ResidueMethod(Enum):
    CLOSED = "closed"
    RICHARDSON = "richardson"
    EULER_PRODUCT = "euler_product"


def sym2_euler_product(s: float, prime_cutoff: int, *,
                       tau_cap: int = DEFAULT_TAU_CAP) -> tuple[float, float]:
    """Symmetric-square L-value at real s >= 1 by a truncated Euler product.

    Local roots {a^2, 1, conj(a)^2} from the normalized Hecke pair at p.
    Returns (value, tail_estimate); the tail estimate is the heuristic
    3*log(2)/log(P) size of the omitted log-tail, reported not certified.
    """
    ps = primes_up_to(prime_cutoff)
    log_val = 0.0
    for p in ps:
        a, b = hecke_normalized(int(p), tau_cap=tau_cap).roots
        x = float(p) ** (-s)
        # roots of the symmetric square: a^2, a*b (= 1), b^2
        loc = (1 - a * a * x) * (1 - x) * (1 - b * b * x)
        log_val += -math.log(abs(loc))
    tail = 3.0 * math.log(2.0) / math.log(prime_cutoff)
    return math.exp(log_val), tail


def _l_near_1(spec: LSeriesSpec, h: float, prime_cutoff: int,
              tau_cap: int) -> float:
    """Real L(1+h) for h > 0, for specs with a simple pole at 1."""
    if spec.shifts is not None:
        v = lfun_eval(spec, 1.0 + h).value
        if abs(v.imag) > 1e-6 * max(1.0, abs(v.real)):
            raise NumericalContractError("L(1+h) not real; shifts not conjugate-closed?")
        return v.real
    if spec.label == "rs-delta":
        z = zeta_auto(1.0 + h).value.real
        sym, _ = sym2_euler_product(1.0 + h, prime_cutoff, tau_cap=tau_cap)
        return z * sym
    raise ValidationError(f"no evaluator near s=1 for spec {spec.label}")


def residue_at_1(spec: LSeriesSpec, method: ResidueMethod, *,
                 h0: float = 1.0 / 16, levels: int = 7,
                 prime_cutoff: int = 100_000,
                 tau_cap: int = DEFAULT_TAU_CAP,
                 rel_tol: float = 5e-3) -> float:
    """Residue of L at s = 1 (simple pole required)."""
    if spec.pole_order_at_1 != 1:
        raise ValidationError(
            f"residue_at_1 needs a simple pole; {spec.label} has order "
            f"{spec.pole_order_at_1}")

    if method is ResidueMethod.CLOSED:
        if spec.shifts is None:
            raise ValidationError("CLOSED method needs a shifted-zeta product")
        out = 1.0 + 0.0j
        for lam in spec.shifts:
            if abs(lam) <= 1e-12:
                continue
            out *= zeta_auto(1.0 - lam).value
        if abs(out.imag) > 1e-8 * max(1.0, abs(out.real)):
            raise NumericalContractError("closed residue not real")
        return float(out.real)

    if method is ResidueMethod.RICHARDSON:
        g = [h0 * 2.0 ** (-j) * _l_near_1(spec, h0 * 2.0 ** (-j),
                                          prime_cutoff, tau_cap)
             for j in range(levels)]
        # eliminate O(h), O(h^2), ... from g(h) = C + a1 h + a2 h^2 + ...
        R = [list(g)]
        for m in range(1, levels):
            prev = R[-1]
            R.append([(2.0 ** m * prev[j + 1] - prev[j]) / (2.0 ** m - 1)
                      for j in range(len(prev) - 1)])
        best = R[-1][0]
        prev_best = R[-2][0]
        if abs(best - prev_best) > rel_tol * max(1.0, abs(best)):
            raise NumericalContractError(
                f"Richardson extrapolation not converged: {prev_best} vs {best}")
        return float(best)

    if method is ResidueMethod.EULER_PRODUCT:
        if spec.label != "rs-delta":
            raise ValidationError("EULER_PRODUCT method is for the cusp-form square")
        val, _tail = sym2_euler_product(1.0, prime_cutoff, tau_cap=tau_cap)
        return val

    raise ValidationError(f"unknown residue method {method}")


def resolve_constant(spec: LSeriesSpec, *, prime_cutoff: int = 100_000,
                     tau_cap: int = DEFAULT_TAU_CAP) -> tuple[float, str]:
    """Main-term constant with sourcing precedence hint > closed > product > extrapolation."""
    if spec.residue_hint is not None:
        return float(spec.residue_hint), "residue_hint"
    if spec.shifts is not None and spec.pole_order_at_1 == 1:
        return residue_at_1(spec, ResidueMethod.CLOSED), "closed"
    if spec.label == "rs-delta":
        return residue_at_1(spec, ResidueMethod.EULER_PRODUCT,
                            prime_cutoff=prime_cutoff, tau_cap=tau_cap), "euler_product"
    return residue_at_1(spec, ResidueMethod.RICHARDSON,
                        prime_cutoff=prime_cutoff, tau_cap=tau_cap), "richardson"


def _abs_on_grid(spec: LSeriesSpec, sigma: float, t_grid: np.ndarray) -> np.ndarray:
    return np.array([abs(lfun_eval(spec, complex(sigma, t)).value)
                     for t in t_grid])


def growth_scan(spec: LSeriesSpec, sigma: float, t_grid: Sequence[float], *,
                epsilon: float = 0.05) -> GrowthFit:
    """Fit the vertical-line growth exponent from dyadic window maxima."""
    t = np.asarray(t_grid, dtype=float)
    if t.size < 2 or np.any(np.diff(t) <= 0) or t[0] < 10:
        raise ValidationError("t_grid must be strictly increasing with min >= 10")
    if not (-0.25 <= sigma <= 2.5):
        raise ValidationError("sigma must lie in [-0.25, 2.5]")
    n_win = int(math.floor(math.log2(t[-1] / t[0]))) + 1
    if n_win < 8:
        raise ValidationError(f"grid spans only {n_win} dyadic windows (< 8)")
    vals = _abs_on_grid(spec, sigma, t)
    win_idx = np.floor(np.log2(t / t[0])).astype(int)
    centers = []
    maxima = []
    for w in range(n_win):
        sel = win_idx == w
        if not np.any(sel):
            continue
        centers.append(math.sqrt(t[sel][0] * t[sel][-1]))
        maxima.append(float(vals[sel].max()))
    slope, intercept, res = loglog_fit(centers, maxima)
    ref = spec.critical_exponent * (1.0 + epsilon - sigma)
    return GrowthFit(sigma=sigma, t_grid=t, measured_exponent=slope,
                     reference_exponent=ref, epsilon_used=epsilon,
                     intercept=intercept, residual=res)


def conversion_exponent_check(spec: LSeriesSpec, sigma: float,
                              t_grid: Sequence[float], *,
                              drop_threshold: float = 1e-6) -> float:
    """Fitted growth exponent of |L(sigma+it)| / |L(1-sigma-it)| in t.

    Points where the denominator sits below drop_threshold times its median
    magnitude are dropped (near-zero protection).
    """
    if spec.shifts is None:
        raise ValidationError("conversion check needs a shifted-zeta product")
    t = np.asarray(t_grid, dtype=float)
    num = _abs_on_grid(spec, sigma, t)
    den = _abs_on_grid(spec, 1.0 - sigma, -t)
    floor = drop_threshold * float(np.median(den))
    keep = den > floor
    if keep.sum() < 4:
        raise NumericalContractError("too many near-zero denominators in conversion check")
    slope, _, _ = loglog_fit(t[keep], num[keep] / den[keep])
    return slope
