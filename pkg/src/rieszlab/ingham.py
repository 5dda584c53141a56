"""Averaging transform, sandwich bounds, and the chain reduction from
higher Riesz means down to partial sums.

The sandwich estimates a monotone A(x) from B(x) = (1/x) int_1^x A(t) dt
through the two difference quotients of x*B(x); the chain applies it level
by level with shrinking windows delta = factor * x / sqrt(E(x)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .coeffs import CoeffTable
from .errors import ValidationError
from .util import adaptive_simpson

DELTA_FACTOR_DEFAULT = 2.0


@dataclass(frozen=True)
class MeanFunction:
    """A deterministic x -> real map on [1, X] with provenance."""

    kind: str  # STEP_SUM | RIESZ | SYNTHETIC
    evaluator: Callable[[float], float]
    domain: tuple[float, float]
    antiderivative: Optional[Callable[[float], float]] = None  # int_1^x A dt
    monotone: bool = False
    label: str = ""

    def __call__(self, x: float) -> float:
        lo, hi = self.domain
        if not (lo <= x <= hi):
            raise ValidationError(f"x={x} outside domain [{lo}, {hi}]")
        return self.evaluator(x)


def step_sum_mean(t: CoeffTable) -> MeanFunction:
    """A(x) = sum_{m<=x} a(m), right-closed at integer jump points."""

    def ev(x: float) -> float:
        M = int(math.floor(x))
        return float(np.sum(t.values[:M]))

    return MeanFunction(kind="STEP_SUM", evaluator=ev, domain=(1.0, float(t.cutoff)),
                        monotone=t.nonneg, label=f"step[{t.source_label}]")


def riesz_mean_function(t: CoeffTable, k: int) -> MeanFunction:
    from .riesz import riesz_mean

    return MeanFunction(kind="RIESZ", evaluator=lambda x: riesz_mean(t, x, k),
                        domain=(1.0, float(t.cutoff)),
                        label=f"riesz{k}[{t.source_label}]")


def synthetic_mean(label: str, f: Callable[[float], float], *,
                   antiderivative: Optional[Callable[[float], float]] = None,
                   monotone: bool = False,
                   domain: tuple[float, float] = (1.0, math.inf)) -> MeanFunction:
    return MeanFunction(kind="SYNTHETIC", evaluator=f, domain=domain,
                        antiderivative=antiderivative, monotone=monotone,
                        label=label)


def average_transform(A: MeanFunction, x: float) -> float:
    """B(x) = (1/x) int_1^x A(t) dt.

    STEP_SUM tables integrate exactly: (1/x) sum_{m<=x} a(m) (x - m);
    other kinds use the closed antiderivative when available, otherwise
    deterministic adaptive Simpson to 1e-10 relative.
    """
    lo, hi = A.domain
    if not (lo <= x <= hi):
        raise ValidationError(f"x={x} outside domain [{lo}, {hi}]")
    if A.kind == "STEP_SUM":
        # recover the table through the closure is not possible; STEP_SUM
        # means are built by step_sum_avg below
        raise ValidationError("use step_sum_avg for STEP_SUM means")
    if A.antiderivative is not None:
        return A.antiderivative(x) / x
    return adaptive_simpson(A.evaluator, 1.0, x, rel_tol=1e-10) / x


def step_sum_avg(t: CoeffTable, x: float) -> float:
    """Exact (1/x) int_1^x of the partial-sum step function of a table."""
    if not (1.0 <= x <= t.cutoff):
        raise ValidationError(f"x={x} outside table range")
    M = int(math.floor(x))
    m = np.arange(1, M + 1, dtype=np.float64)
    return float(np.sum(t.values[:M] * (x - m))) / x


def sandwich_bounds(B: Callable[[float], float], x: float,
                    delta: float) -> tuple[float, float]:
    """Difference-quotient bounds (lower, upper) for a monotone A at x."""
    if delta <= 0:
        raise ValidationError("delta must be positive")
    if x - delta < 1.0:
        raise ValidationError("x - delta must stay >= 1")
    xb = x * B(x)
    upper = ((x + delta) * B(x + delta) - xb) / delta
    lower = (xb - (x - delta) * B(x - delta)) / delta
    return lower, upper


def identity_probe(t: CoeffTable, x: float, k: int) -> tuple[float, float, float]:
    """LHS = S_k(x); RHS = (1/x) int_1^x S_{k-1}(t) dt by exact per-term
    integration.  Returns (lhs, rhs, gap); gap is identically 0 at k = 1.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if not (1.0 <= x <= t.cutoff):
        raise ValidationError("x outside table range")
    M = int(math.floor(x))
    a = t.values[:M]
    m = np.arange(1, M + 1, dtype=np.float64)
    w = (x - m) / x
    lhs = float(np.sum(a * w ** k)) / math.factorial(k)

    # int_m^x (1 - m/t)^(k-1) dt expanded binomially:
    #   i = 0: t | i = 1: -m(k-1) log t | i >= 2: C(k-1,i)(-m)^i t^(1-i)/(1-i)
    if k == 1:
        per_term = w  # (F(x) - F(m)) / x with F(t) = t, computed as the weight
    else:
        def F(tv: np.ndarray) -> np.ndarray:
            out = tv.astype(np.float64).copy()
            for i in range(1, k):
                coef = math.comb(k - 1, i)
                if i == 1:
                    out += coef * (-m) * np.log(tv)
                else:
                    out += coef * (-m) ** i * tv ** (1 - i) / (1 - i)
            return out

        F_x = F(np.full(M, x))
        F_m = F(m)
        per_term = (F_x - F_m) / x
    rhs = float(np.sum(a * per_term)) / math.factorial(k)
    return lhs, rhs, lhs - rhs


@dataclass(frozen=True)
class LevelRecord:
    level: int  # target level (the object being estimated)
    c_est: float
    delta_tag: str
    sandwich_width_at_ref_x: float
    identity_discrepancy_at_ref_x: float
    sandwich_vs_direct_at_ref_x: float
    width_exponent: float
    inverted: bool
    x: np.ndarray = field(repr=False, default=None)
    lower: np.ndarray = field(repr=False, default=None)
    upper: np.ndarray = field(repr=False, default=None)
    midpoint: np.ndarray = field(repr=False, default=None)
    predicted_cascade: np.ndarray = field(repr=False, default=None)
    predicted_residue: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class ReductionTrace:
    k1: int
    C: float
    ref_x: float
    levels: tuple[LevelRecord, ...]
    partial_sum_coeff: float  # level-0 estimate of sum a(m) ~ coeff * x
    candidate_residue: float  # C
    candidate_cascade: float    # 2^k1 C / (k1+1)


def chain_reduce(t: CoeffTable, k1: int, C: float, x_grid: Sequence[float], *,
                 delta_factor: float = DELTA_FACTOR_DEFAULT) -> ReductionTrace:
    """Descend from the k1-th Riesz mean to the partial sum level by level.

    At step j (= 1..k1) the mean of level k = k1-j+1, normalized by 1/k1!,
    is sandwiched with window delta = factor * x / sqrt(E_j(x)) where
    E_1(x) = 10x and E_{j+1} = sqrt(E_j).  Each level records the sandwich
    estimate of the next level down and its discrepancy against the direct
    evaluation from the table.
    """
    if k1 < 1:
        raise ValidationError("k1 must be >= 1")
    if not t.nonneg:
        raise ValidationError("chain_reduce needs a non-negative table")
    xg = np.asarray(x_grid, dtype=float)
    if xg.size < 2 or np.any(np.diff(xg) <= 0):
        raise ValidationError("x_grid must be strictly increasing, length >= 2")
    norm = math.factorial(k1)

    def S(x: float, k: int) -> float:
        M = int(math.floor(x))
        a = t.values[:M]
        if k == 0:
            return float(np.sum(a)) / norm
        m = np.arange(1, M + 1, dtype=np.float64)
        return float(np.sum(a * ((x - m) / x) ** k)) / norm

    levels = []
    ref_x = float(xg[-1])
    for j in range(1, k1 + 1):
        k = k1 - j + 1  # level of the averaged object B
        target = k - 1
        exp_e = 1.0 / 2.0 ** (j - 1)  # E_j(x) = (10x)^(1/2^(j-1))

        def delta_of(x: float) -> float:
            return delta_factor * x / math.sqrt((10.0 * x) ** exp_e)

        xs, lows, ups, mids = [], [], [], []
        inverted = False
        for x in xg:
            d = delta_of(float(x))
            if x - d < 1.0 or x + d > t.cutoff:
                continue
            lo, up = sandwich_bounds(lambda xv, _k=k: S(xv, _k), float(x), d)
            if up < lo - 1e-9 * max(1.0, abs(lo)):
                inverted = True
            xs.append(float(x))
            lows.append(lo)
            ups.append(up)
            mids.append(0.5 * (lo + up))
        if not xs:
            raise ValidationError(
                f"no usable grid points at level {target} (windows exceed table)")
        xs_arr = np.array(xs)
        widths = np.array(ups) - np.array(lows)
        with np.errstate(divide="ignore"):
            pos = widths > 1e-13
            if pos.sum() >= 3:
                from .util import loglog_fit
                width_exp, _, _ = loglog_fit(xs_arr[pos], widths[pos])
            else:
                width_exp = float("nan")
        ref = float(xs_arr[-1])
        mid_ref = mids[-1]
        c_est = mid_ref / ref
        _, _, gap = identity_probe(t, ref, k)
        direct = S(ref, target)  # next-lower mean straight from the table
        levels.append(LevelRecord(
            level=target,
            c_est=c_est,
            delta_tag=f"{delta_factor}*x/(10x)^(1/2^{j})",
            sandwich_width_at_ref_x=float(widths[-1]),
            identity_discrepancy_at_ref_x=float(gap),
            sandwich_vs_direct_at_ref_x=float(mid_ref - direct),
            width_exponent=float(width_exp),
            inverted=inverted,
            x=xs_arr,
            lower=np.array(lows),
            upper=np.array(ups),
            midpoint=np.array(mids),
            predicted_cascade=(2.0 ** j) * C / math.factorial(k1 + 1) * xs_arr,
            predicted_residue=C / (k * norm) * xs_arr,
        ))
        ref_x = ref

    level0 = levels[-1]
    coeff = level0.c_est * norm
    return ReductionTrace(
        k1=k1, C=C, ref_x=ref_x, levels=tuple(levels),
        partial_sum_coeff=coeff,
        candidate_residue=C,
        candidate_cascade=2.0 ** k1 * C / (k1 + 1))
