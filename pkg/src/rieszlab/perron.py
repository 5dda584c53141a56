"""Truncated Perron kernels and rectangle-contour residue checks.

The kernel (1/2 pi i) int y^s / (s(s+1)...(s+k)) ds over a vertical
segment has closed limit (1/k!)(1 - 1/y)^k for y >= 1 and 0 for y <= 1;
this module measures how fast the truncated integral approaches it, and
evaluates the same kernel against an L-function around a rectangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .analytic import lfun_eval, residue_at_1, ResidueMethod
from .coeffs import LSeriesSpec
from .errors import PoleCollisionError, ResolutionError, ValidationError
from .util import loglog_fit

_GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = leggauss(_GL_ORDER)

SATURATION_FLOOR = 1e-14


@dataclass(frozen=True)
class KernelParams:
    y: float
    k: int
    c: float
    T: float

    def __post_init__(self):
        if self.y <= 0:
            raise ValidationError("y must be positive")
        if self.c <= 0:
            raise ValidationError("c must be positive")
        if self.T < 1:
            raise ValidationError("T must be >= 1")
        if self.k < 0:
            raise ValidationError("k must be >= 0")


@dataclass(frozen=True)
class ContourReport:
    x: float
    k: int
    c: float
    T: float
    left_sigma: float
    integral_value: complex
    residue_main: float
    shifted_residue_sum: complex
    horizontal_contrib: tuple[complex, complex]
    left_contrib: complex
    right_contrib: complex
    tolerance: float


def kernel_closed(y: float, k: int) -> float:
    """Limit value of the kernel integral as T -> infinity."""
    if k < 1:
        raise ValidationError("k must be >= 1 (the 1/s kernel is out of range)")
    if y <= 0:
        raise ValidationError("y must be positive")
    if y <= 1.0:
        return 0.0
    return (1.0 - 1.0 / y) ** k / math.factorial(k)


def min_panels(y: float, k: int, T: float) -> int:
    """Panel-count heuristic: one order-16 panel per pi/4 of phase T*log y."""
    phase = 2.0 * T * (abs(math.log(y)) + 0.5)
    return max(64, int(math.ceil(phase / (math.pi / 4.0))))


def _kernel_denominator(s: np.ndarray, k: int) -> np.ndarray:
    den = s.copy()
    for j in range(1, k + 1):
        den *= s + j
    return den


def kernel_quad(p: KernelParams, panels: int) -> complex:
    """Composite Gauss-Legendre quadrature of the kernel over [c-iT, c+iT].

    Deterministic: fixed nodes, summation ordered by panel index.
    """
    if p.k < 1:
        raise ValidationError("k must be >= 1")
    need = min_panels(p.y, p.k, p.T)
    if panels < need:
        raise ResolutionError(
            f"panels={panels} below resolution heuristic {need} "
            f"for T={p.T}, y={p.y}")
    edges = np.linspace(-p.T, p.T, panels + 1)
    log_y = math.log(p.y)
    acc = np.complex128(0.0)
    for i in range(panels):
        a, b = edges[i], edges[i + 1]
        t = 0.5 * (a + b) + 0.5 * (b - a) * _GL_NODES
        s = p.c + 1j * t
        vals = np.exp(s * log_y) / _kernel_denominator(s, p.k)
        acc += 0.5 * (b - a) * np.sum(_GL_WEIGHTS * vals)
    # ds = i dt; divide by 2 pi i
    return complex(acc / (2.0 * math.pi))


@dataclass(frozen=True)
class ScanCell:
    y: float
    k: int
    T_grid: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float | None
    saturated: bool
    within_contract: bool


def truncation_scan(ys: Sequence[float], ks: Sequence[int], c: float,
                    T_grid: Sequence[float]) -> list[ScanCell]:
    """Fitted decay slope of log|kernel_quad - kernel_closed| vs log T."""
    Ts = [float(T) for T in T_grid]
    if len(Ts) < 5:
        raise ValidationError("T grid must have length >= 5")
    for a, b in zip(Ts, Ts[1:]):
        if b / a < 2.0 - 1e-12:
            raise ValidationError("T grid must be geometric with ratio >= 2")
    cells = []
    for y in ys:
        closed_ref = None
        for k in ks:
            closed_ref = kernel_closed(y, k)
            errs = []
            for T in Ts:
                params = KernelParams(y=y, k=k, c=c, T=T)
                q = kernel_quad(params, min_panels(y, k, T))
                errs.append(abs(q - closed_ref))
            errs_arr = np.array(errs)
            saturated = bool(np.all(errs_arr < SATURATION_FLOOR))
            slope = None
            within = False
            if not saturated:
                keep = errs_arr > 1e-16
                if keep.sum() >= 3:
                    slope, _, _ = loglog_fit(np.array(Ts)[keep], errs_arr[keep])
                    within = (-k - 0.5) <= slope <= (-k + 0.5)
                else:
                    saturated = True
            cells.append(ScanCell(y=float(y), k=int(k), T_grid=tuple(Ts),
                                  errors=tuple(errs), slope=slope,
                                  saturated=saturated, within_contract=within))
    return cells


def _edge_quad(f: Callable[[np.ndarray], np.ndarray], s0: complex, s1: complex,
               panels: int) -> tuple[complex, float]:
    """Integrate f along the straight segment s0 -> s1; returns (value, err_acc)."""
    acc = np.complex128(0.0)
    err = 0.0
    for i in range(panels):
        a = s0 + (s1 - s0) * (i / panels)
        b = s0 + (s1 - s0) * ((i + 1) / panels)
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        s = mid + half * _GL_NODES.astype(np.complex128)
        vals, verr = f(s)
        acc += half * np.sum(_GL_WEIGHTS * vals)
        err += abs(half) * float(np.sum(np.abs(_GL_WEIGHTS) * verr))
    return complex(acc), err


def contour_residue_check(spec: LSeriesSpec, x: float, k: int, c: float,
                          T: float, left_sigma: float, *,
                          rel_tol: float = 1e-3) -> ContourReport:
    """Rectangle-contour evaluation of L(s) x^s / (s...(s+k)) around s = 1.

    The counterclockwise rectangle [left_sigma +- iT, c +- iT] is integrated
    edge by edge and compared with the sum of enclosed residues: the simple
    pole at 1 (main term C x/(k+1)!) plus any enclosed shifted poles 1+l.
    """
    if spec.shifts is None:
        raise ValidationError("contour check needs an analytic evaluator (shift spec)")
    if spec.pole_order_at_1 != 1:
        raise ValidationError("contour check needs a simple pole at s = 1")
    if not (left_sigma < 1.0 < c):
        raise ValidationError("need left_sigma < 1 < c")
    if k < 1:
        raise ValidationError("k must be >= 1")

    poles = [1.0 + lam for lam in spec.shifts] + [complex(-j) for j in range(k + 1)]
    for pole in poles:
        d = _distance_to_rectangle(pole, left_sigma, c, T)
        if d < 1e-3:
            raise PoleCollisionError(
                f"pole at {pole} within {d:.2e} of the contour")

    def f(s: np.ndarray):
        vals = np.empty(s.shape, dtype=np.complex128)
        errs = np.empty(s.shape, dtype=np.float64)
        den = _kernel_denominator(s, k)
        for i, si in enumerate(s):
            r = lfun_eval(spec, complex(si))
            vals[i] = r.value
            errs[i] = r.abs_error_estimate
        xs = np.exp(s * math.log(x))
        return vals * xs / den, errs * np.abs(xs / den)

    v_panels = max(64, int(math.ceil(2 * T * (abs(math.log(x)) + 0.5) / (math.pi / 4))))
    h_panels = max(32, int(math.ceil((c - left_sigma) * (abs(math.log(x)) + 0.5) * 4)))

    right, e1 = _edge_quad(f, complex(c, -T), complex(c, T), v_panels)
    top, e2 = _edge_quad(f, complex(c, T), complex(left_sigma, T), h_panels)
    left, e3 = _edge_quad(f, complex(left_sigma, T), complex(left_sigma, -T), v_panels)
    bottom, e4 = _edge_quad(f, complex(left_sigma, -T), complex(c, -T), h_panels)

    total = (right + top + left + bottom) / (2j * math.pi)
    quad_err = (e1 + e2 + e3 + e4) / (2 * math.pi)

    C = (spec.residue_hint if spec.residue_hint is not None
         else residue_at_1(spec, ResidueMethod.CLOSED))
    main = C * x / math.factorial(k + 1)

    shifted = 0.0 + 0.0j
    for i, lam in enumerate(spec.shifts):
        if abs(lam) <= 1e-12:
            continue
        s0 = 1.0 + lam
        if not (left_sigma < s0.real < c and -T < s0.imag < T):
            continue
        rest = 1.0 + 0.0j
        for j, mu in enumerate(spec.shifts):
            if j == i:
                continue
            if abs(mu - lam) <= 1e-12:
                raise ValidationError("repeated shifts give a higher-order pole")
            rest *= lfun_eval_single_zeta(s0 - mu)
        den = np.complex128(1.0)
        for j in range(k + 1):
            den *= s0 + j
        shifted += rest * np.exp(s0 * math.log(x)) / den

    tol = quad_err + 1e-9 * (abs(main) + 1.0)
    return ContourReport(
        x=x, k=k, c=c, T=T, left_sigma=left_sigma,
        integral_value=total, residue_main=main,
        shifted_residue_sum=complex(shifted),
        horizontal_contrib=(top / (2j * math.pi), bottom / (2j * math.pi)),
        left_contrib=left / (2j * math.pi),
        right_contrib=right / (2j * math.pi),
        tolerance=tol)


def lfun_eval_single_zeta(s: complex) -> complex:
    from .analytic import zeta_auto
    return zeta_auto(s).value


def _distance_to_rectangle(p: complex, left: float, right: float, T: float) -> float:
    """Distance from p to the rectangle boundary [left, right] x [-T, T]."""
    inside_x = left <= p.real <= right
    inside_y = -T <= p.imag <= T
    dx = min(abs(p.real - left), abs(p.real - right))
    dy = min(abs(p.imag - T), abs(p.imag + T))
    if inside_x and inside_y:
        return min(dx, dy)
    if inside_x:
        return dy
    if inside_y:
        return dx
    return math.hypot(dx, dy)
