"""Concrete L-function instances with independently computable coefficients.

The zeta-product family (ZETA, ZETA_SQUARED, EISENSTEIN and its
Rankin-Selberg square) is exactly evaluable everywhere; the weight-12
cusp form supplies a genuine degree-4 Rankin-Selberg square through its
integer q-expansion.
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import gmpy2
import numpy as np

from .coeffs import LSeriesSpec, SatakeSet, rankin_square
from .errors import (
    ResourceLimitError,
    TableChecksumError,
    TableHeaderError,
    TableVersionError,
    ValidationError,
)
from .util import fnv1a64

DEFAULT_TAU_CAP = 20_000

_TAU_MAGIC = b"RZI1"  # exact-int variant of the cache format


@dataclass(frozen=True)
class TestbedId:
    """Identifier for a built-in testbed family."""

    name: str  # ZETA | ZETA_SQUARED | EISENSTEIN | RS_DELTA | RS_EISENSTEIN
    shifts: Optional[tuple[complex, ...]] = None

    def __post_init__(self):
        names = {"ZETA", "ZETA_SQUARED", "EISENSTEIN", "RS_DELTA", "RS_EISENSTEIN"}
        if self.name not in names:
            raise ValidationError(f"unknown testbed {self.name!r}")
        if self.name in ("EISENSTEIN", "RS_EISENSTEIN"):
            if not self.shifts:
                raise ValidationError(f"{self.name} requires shifts")
            shifts = tuple(complex(z) for z in self.shifts)
            for z in shifts:
                if abs(z.real) > 1e-12:
                    raise ValidationError("shifts must have zero real part")
            object.__setattr__(self, "shifts", shifts)
        elif self.shifts is not None:
            raise ValidationError(f"{self.name} takes no shifts")


def sigma1_table(N: int) -> np.ndarray:
    """sigma_1(1..N) by a divisor-sum sieve, O(N log N)."""
    s = np.zeros(N + 1, dtype=np.int64)
    for d in range(1, N + 1):
        s[d::d] += d
    return s


def tau_recurrence(N: int) -> list[int]:
    """tau(1..N) from n*f_n = -24 * sum_{j<=n} sigma_1(j) f_{n-j}, exactly."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    sig = sigma1_table(N).tolist()
    f = [0] * N
    f[0] = 1
    for n in range(1, N):
        acc = 0
        for j in range(1, n + 1):
            acc += sig[j] * f[n - j]
        val = -24 * acc
        q, r = divmod(val, n)
        if r:
            raise ArithmeticError("recurrence step not integral; internal bug")
        f[n] = q
    return f  # tau(n) = f[n-1]


def _pentagonal_series(N: int) -> list[int]:
    """Coefficients of prod_{n>=1} (1 - q^n) up to q^(N-1) (sparse support)."""
    e = [0] * N
    e[0] = 1
    k = 1
    while True:
        for g in (k * (3 * k - 1) // 2, k * (3 * k + 1) // 2):
            if g < N:
                e[g] = -1 if k % 2 else 1
        if k * (3 * k - 1) // 2 >= N:
            break
        k += 1
    return e


_KRON_BYTES = 32  # 256-bit digits; |convolution coefficient| << 2^255 here


def _encode(coeffs: list[int], N: int) -> gmpy2.mpz:
    bpos = bytearray(N * _KRON_BYTES)
    bneg = bytearray(N * _KRON_BYTES)
    w = _KRON_BYTES
    for i in range(min(len(coeffs), N)):
        c = coeffs[i]
        if c > 0:
            bpos[i * w:(i * w) + w] = c.to_bytes(w, "little")
        elif c < 0:
            bneg[i * w:(i * w) + w] = (-c).to_bytes(w, "little")
    return gmpy2.mpz(int.from_bytes(bytes(bpos), "little")
                     - int.from_bytes(bytes(bneg), "little"))


def _decode(v: gmpy2.mpz, N: int) -> list[int]:
    w = _KRON_BYTES
    half = 1 << (8 * w - 1)
    # offset every digit by 2^255 so balanced digits land in [0, 2^256)
    # with no carries; the untruncated product has digits up to index 2N
    n_digits = 2 * N + 1
    offset = int.from_bytes((bytes(w - 1) + b"\x80") * n_digits, "little")
    total = int(v) + offset
    if total < 0:
        raise ArithmeticError("Kronecker digit out of range; internal bug")
    buf = total.to_bytes(n_digits * w + w, "little")
    out = []
    for i in range(N):
        d = int.from_bytes(buf[i * w:(i * w) + w], "little") - half
        out.append(d)
    return out


def _kron_mul(a: list[int], b: list[int], N: int) -> list[int]:
    """Truncated exact integer polynomial product via Kronecker substitution."""
    return _decode(_encode(a, N) * _encode(b, N), N)


def _delta_coeffs_fast(N: int) -> list[int]:
    """Coefficients of prod (1-q^n)^24 up to q^(N-1) via repeated squaring."""
    e1 = _pentagonal_series(N)
    e2 = _kron_mul(e1, e1, N)
    e4 = _kron_mul(e2, e2, N)
    e8 = _kron_mul(e4, e4, N)
    e16 = _kron_mul(e8, e8, N)
    return _kron_mul(e16, e8, N)


def tau_table(N: int, *, cap: int = DEFAULT_TAU_CAP) -> list[int]:
    """Exact tau(1..N) for the weight-12 cusp form q * prod (1-q^n)^24.

    Small N goes through the sigma_1 recurrence; larger N uses exact
    eta-power squaring (Kronecker substitution), checked against the
    recurrence in the test suite.  Python/gmpy2 integers are unbounded, so
    no overflow branch is needed.
    """
    if N < 1:
        raise ValidationError("N must be >= 1")
    if N > cap:
        raise ResourceLimitError(f"tau table size {N} exceeds cap {cap}")
    if N <= 1024:
        return tau_recurrence(N)
    return _delta_coeffs_fast(N)


@lru_cache(maxsize=4)
def _tau_cached(N: int, cap: int) -> tuple[int, ...]:
    return tuple(tau_table(N, cap=cap))


def normalize_hecke(p: int, tau_p: int) -> SatakeSet:
    """Satake pair {a, b} with a + b = tau(p) p^(-11/2), a*b = 1."""
    lam = tau_p / p ** 5.5
    disc = lam * lam - 4.0
    if disc < 0:
        im = math.sqrt(-disc) / 2.0
        alpha = complex(lam / 2.0, im)
        roots = (alpha, alpha.conjugate())
    else:
        rt = math.sqrt(disc) / 2.0
        roots = (complex(lam / 2.0 + rt), complex(lam / 2.0 - rt))
    return SatakeSet(prime=p, roots=roots)


def _zeta_shift_roots(p: int, shifts: Sequence[complex]) -> SatakeSet:
    # zeta(s - l) has local root p^l
    return SatakeSet(prime=p, roots=tuple(complex(p) ** z for z in shifts))


def make_testbed(tid: TestbedId, *, tau_cap: int = DEFAULT_TAU_CAP) -> LSeriesSpec:
    """Build the LSeriesSpec for a testbed identifier."""
    if tid.name == "ZETA":
        return LSeriesSpec(
            label="zeta", degree=1,
            local_factor=lambda p: SatakeSet(prime=p, roots=(1.0 + 0j,)),
            pole_order_at_1=1, residue_hint=1.0,
            shifts=(0j,), critical_exponent=0.5, nonneg_coeffs=True)

    if tid.name == "ZETA_SQUARED":
        return LSeriesSpec(
            label="zeta2", degree=2,
            local_factor=lambda p: SatakeSet(prime=p, roots=(1.0 + 0j, 1.0 + 0j)),
            pole_order_at_1=2, residue_hint=None,
            shifts=(0j, 0j), critical_exponent=1.0, nonneg_coeffs=True)

    if tid.name == "EISENSTEIN":
        shifts = tid.shifts
        d = len(shifts)
        n_zero = sum(1 for z in shifts if abs(z) <= 1e-12)
        label = "eis[" + ",".join(f"{z.imag:g}" for z in shifts) + "]"
        return LSeriesSpec(
            label=label, degree=d,
            local_factor=lambda p, _s=shifts: _zeta_shift_roots(p, _s),
            pole_order_at_1=n_zero, residue_hint=None,
            shifts=shifts, critical_exponent=d / 2.0, nonneg_coeffs=False)

    if tid.name == "RS_EISENSTEIN":
        base = tid.shifts
        d = len(base)
        # square roots p^(l_i) * conj(p^(l_j)) = p^(l_i - l_j)
        shifts = tuple(li - lj for li in base for lj in base)
        n_zero = sum(1 for z in shifts if abs(z) <= 1e-12)
        label = "rs-eis[" + ",".join(f"{z.imag:g}" for z in base) + "]"
        return LSeriesSpec(
            label=label, degree=d * d,
            local_factor=lambda p, _s=shifts: _zeta_shift_roots(p, _s),
            pole_order_at_1=n_zero, residue_hint=None,
            shifts=shifts, critical_exponent=d * d / 2.0, nonneg_coeffs=True)

    if tid.name == "RS_DELTA":
        taus = _tau_cached(tau_cap, tau_cap)

        def local(p: int, _taus=taus) -> SatakeSet:
            if p > len(_taus):
                raise ResourceLimitError(
                    f"RS_DELTA local factor at p={p} beyond tau cap {len(_taus)}")
            return rankin_square(normalize_hecke(p, _taus[p - 1]))

        return LSeriesSpec(
            label="rs-delta", degree=4, local_factor=local,
            pole_order_at_1=1, residue_hint=None,
            shifts=None, critical_exponent=2.0, nonneg_coeffs=True)

    raise ValidationError(f"unknown testbed {tid.name!r}")


def hecke_normalized(p: int, *, tau_cap: int = DEFAULT_TAU_CAP) -> SatakeSet:
    """Satake set of the cusp form at p, from the cached tau table."""
    taus = _tau_cached(tau_cap, tau_cap)
    if p > len(taus):
        raise ResourceLimitError(f"p={p} beyond tau cap {len(taus)}")
    return normalize_hecke(p, taus[p - 1])


def save_tau_table(taus: Sequence[int], path) -> None:
    """Cache exact tau values (signed 128-bit little-endian payload)."""
    block = b"".join(int(t).to_bytes(16, "little", signed=True) for t in taus)
    payload = (_TAU_MAGIC + struct.pack("<Q", len(taus)) + block
               + struct.pack("<Q", fnv1a64(block)))
    d = os.path.dirname(os.path.abspath(os.fspath(path)))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".rzi-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, os.fspath(path))
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_tau_table(path) -> list[int]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4 or data[:4] != _TAU_MAGIC:
        raise TableVersionError(f"{path}: bad magic {data[:4]!r}")
    if len(data) < 12:
        raise TableHeaderError(f"{path}: truncated header")
    (n,) = struct.unpack_from("<Q", data, 4)
    off = 12
    if len(data) != off + 16 * n + 8:
        raise TableChecksumError(f"{path}: size mismatch")
    block = data[off: off + 16 * n]
    (stored,) = struct.unpack_from("<Q", data, off + 16 * n)
    if fnv1a64(block) != stored:
        raise TableChecksumError(f"{path}: checksum mismatch")
    return [int.from_bytes(block[i * 16:(i + 1) * 16], "little", signed=True)
            for i in range(n)]
