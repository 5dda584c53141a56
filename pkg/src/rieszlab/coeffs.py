"""Dirichlet coefficients of L-functions from local Euler factors.

A degree-d Euler factor at p is determined by its d complex roots; the
coefficient at p^e is the complete homogeneous symmetric polynomial h_e of
those roots.  A smallest-prime-factor sieve extends prime-power data to a
full multiplicative coefficient table.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    NumericalContractError,
    ResourceLimitError,
    TableChecksumError,
    TableHeaderError,
    TableVersionError,
    ValidationError,
)
from .util import fnv1a64

DEFAULT_MAX_SIEVE = 10_000_000

_MAGIC = b"RZC1"


@dataclass(frozen=True)
class SatakeSet:
    """Local roots of an Euler factor at a prime."""

    prime: int
    roots: tuple[complex, ...]

    def __post_init__(self):
        if self.prime < 2:
            raise ValidationError("prime must be >= 2")
        if len(self.roots) < 1:
            raise ValidationError("need at least one root")
        object.__setattr__(self, "roots", tuple(complex(r) for r in self.roots))

    @property
    def degree(self) -> int:
        return len(self.roots)


@dataclass(frozen=True)
class LSeriesSpec:
    """A degree-d L-function described by its local factors and pole data."""

    label: str
    degree: int
    local_factor: Callable[[int], SatakeSet]
    pole_order_at_1: int = 0
    residue_hint: Optional[float] = None
    shifts: Optional[tuple[complex, ...]] = None
    critical_exponent: float = 0.0
    nonneg_coeffs: bool = False

    def __post_init__(self):
        if self.shifts is not None:
            shifts = tuple(complex(z) for z in self.shifts)
            if len(shifts) != self.degree:
                raise ValidationError("shifts length must equal degree")
            for z in shifts:
                if abs(z.real) > 1e-12:
                    raise ValidationError("shifts must be purely imaginary")
            object.__setattr__(self, "shifts", shifts)


@dataclass(frozen=True)
class CoeffTable:
    """Dirichlet coefficients a(1..X) with provenance."""

    cutoff: int
    values: np.ndarray  # values[m-1] = a(m)
    nonneg: bool
    source_label: str

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != (self.cutoff,):
            raise ValidationError("values length must equal cutoff")
        object.__setattr__(self, "values", vals)
        if self.nonneg and vals.min(initial=0.0) < -1e-9:
            raise NumericalContractError(
                "nonneg table has coefficient %g < -1e-9" % vals.min())

    def a(self, m: int) -> float:
        return float(self.values[m - 1])


def local_coeffs(roots: Sequence[complex], e_max: int) -> np.ndarray:
    """Power-series coefficients of prod_i (1 - r_i t)^(-1) up to t^e_max.

    c(e) is the complete homogeneous symmetric polynomial h_e(roots),
    built by iterated multiplication with geometric series: multiplying a
    series by 1/(1 - r t) is the recurrence c(e) += r * c(e-1).
    """
    if e_max < 0:
        raise ValidationError("e_max must be >= 0")
    c = np.zeros(e_max + 1, dtype=np.complex128)
    c[0] = 1.0
    for r in roots:
        for e in range(1, e_max + 1):
            c[e] = c[e] + r * c[e - 1]
    return c


def real_local_coeffs(roots: Sequence[complex], e_max: int) -> np.ndarray:
    """local_coeffs projected to the real axis, checking the imaginary part."""
    c = local_coeffs(roots, e_max)
    scale = np.abs(c) + 1.0
    if np.max(np.abs(c.imag) / scale) > 1e-8:
        raise NumericalContractError(
            "local coefficients have non-negligible imaginary part; "
            "root multiset is not conjugation-closed")
    return c.real.copy()


def rankin_square(s: SatakeSet) -> SatakeSet:
    """Rankin-Selberg square: root multiset {a_i * conj(a_j)}, degree d^2."""
    roots = tuple(a * b.conjugate() for a in s.roots for b in s.roots)
    return SatakeSet(prime=s.prime, roots=roots)


def multiplicative_sieve(spec: LSeriesSpec, X: int, *, workers: int = 1,
                         max_x: int = DEFAULT_MAX_SIEVE) -> CoeffTable:
    """Realize an Euler product as coefficients a(1..X).

    Smallest-prime-factor sieve, then a(m) = prod_{p^e || m} c_p(e) by a
    single multiplicative DP pass.  Deterministic regardless of workers.
    """
    if X < 1:
        raise ValidationError("X must be >= 1")
    if X > max_x:
        raise ResourceLimitError(
            f"sieve cutoff {X} exceeds configured budget {max_x}")

    spf = np.zeros(X + 1, dtype=np.int64)
    for p in range(2, X + 1):
        if spf[p] == 0:
            sl = spf[p::p]
            sl[sl == 0] = p

    primes = [p for p in range(2, X + 1) if spf[p] == p]

    def prime_block(ps):
        out = {}
        for p in ps:
            e_max = int(math.log(X) / math.log(p) + 1e-9)
            roots = spec.local_factor(int(p)).roots
            out[p] = real_local_coeffs(roots, e_max)
        return out

    cp: dict[int, np.ndarray] = {}
    if workers > 1 and len(primes) > 64:
        chunk = (len(primes) + workers - 1) // workers
        blocks = [primes[i:i + chunk] for i in range(0, len(primes), chunk)]
        with ThreadPoolExecutor(max_workers=workers) as ex:
            for block in ex.map(prime_block, blocks):
                cp.update(block)
    else:
        cp.update(prime_block(primes))

    a = np.empty(X + 1, dtype=np.float64)
    a[0] = 0.0
    if X >= 1:
        a[1] = 1.0
    # pp[m] = p^e exactly dividing m for p = spf[m]; ee[m] = e
    pp = np.zeros(X + 1, dtype=np.int64)
    ee = np.zeros(X + 1, dtype=np.int64)
    spf_l = spf.tolist()
    pp_l = pp.tolist()
    ee_l = ee.tolist()
    a_l = a.tolist()
    for m in range(2, X + 1):
        p = spf_l[m]
        q = m // p
        if q % p == 0:
            pp_l[m] = pp_l[q] * p
            ee_l[m] = ee_l[q] + 1
        else:
            pp_l[m] = p
            ee_l[m] = 1
        rest = m // pp_l[m]
        a_l[m] = a_l[rest] * cp[p][ee_l[m]]
    values = np.array(a_l[1:], dtype=np.float64)

    if spec.nonneg_coeffs:
        lo = float(values.min())
        if lo < -1e-9:
            raise NumericalContractError(
                f"declared-nonnegative spec {spec.label} produced a({int(np.argmin(values)) + 1}) = {lo}")
    return CoeffTable(cutoff=X, values=values, nonneg=spec.nonneg_coeffs,
                      source_label=spec.label)


def dirichlet_convolve(a: CoeffTable, b: CoeffTable) -> CoeffTable:
    """(a * b)(m) = sum_{de = m} a(d) b(e), same cutoff."""
    if a.cutoff != b.cutoff:
        raise ValidationError("cutoff mismatch in dirichlet_convolve")
    X = a.cutoff
    out = np.zeros(X + 1, dtype=np.float64)
    av = a.values
    bv = b.values
    for d in range(1, X + 1):
        ad = av[d - 1]
        if ad == 0.0:
            continue
        n_mult = X // d
        out[d:: d][: n_mult] += ad * bv[:n_mult]
    return CoeffTable(cutoff=X, values=out[1:].copy(), nonneg=False,
                      source_label=f"({a.source_label})*({b.source_label})")


def save_table(t: CoeffTable, path) -> None:
    """Write a table in the binary cache format (magic RZC1, FNV-1a tail)."""
    label = t.source_label.encode("utf-8")
    if len(label) > 0xFFFF:
        raise ValidationError("label too long")
    block = t.values.astype("<f8").tobytes()
    payload = (_MAGIC
               + struct.pack("<QBH", t.cutoff, 1 if t.nonneg else 0, len(label))
               + label + block
               + struct.pack("<Q", fnv1a64(block)))
    _atomic_write(path, payload)


def load_table(path) -> CoeffTable:
    """Read a table written by save_table, verifying the layout and checksum."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4 or data[:4] != _MAGIC:
        raise TableVersionError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 4 + 11:
        raise TableHeaderError(f"{path}: truncated header")
    cutoff, nonneg, label_len = struct.unpack_from("<QBH", data, 4)
    off = 4 + 11
    if nonneg not in (0, 1):
        raise TableHeaderError(f"{path}: bad nonneg flag {nonneg}")
    if len(data) < off + label_len:
        raise TableHeaderError(f"{path}: truncated label")
    label = data[off: off + label_len].decode("utf-8")
    off += label_len
    n_bytes = 8 * cutoff
    if len(data) != off + n_bytes + 8:
        raise TableChecksumError(
            f"{path}: value block size mismatch (file truncated or padded)")
    block = data[off: off + n_bytes]
    (stored,) = struct.unpack_from("<Q", data, off + n_bytes)
    if fnv1a64(block) != stored:
        raise TableChecksumError(f"{path}: checksum mismatch")
    values = np.frombuffer(block, dtype="<f8").astype(np.float64)
    return CoeffTable(cutoff=int(cutoff), values=values, nonneg=bool(nonneg),
                      source_label=label)


def _atomic_write(path, payload: bytes) -> None:
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".rzc-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
