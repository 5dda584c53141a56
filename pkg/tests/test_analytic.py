import cmath
import math

import mpmath
import numpy as np
import pytest

from rieszlab.analytic import (
    ResidueMethod,
    conversion_exponent_check,
    growth_scan,
    lfun_eval,
    residue_at_1,
    resolve_constant,
    sym2_euler_product,
    zeta_auto,
    zeta_em,
)
from rieszlab.errors import PoleCollisionError, ValidationError
from rieszlab.testbeds import TestbedId, make_testbed


def test_zeta_special_values():
    assert abs(zeta_auto(2.0 + 0j).value - math.pi**2 / 6) < 1e-10
    assert abs(zeta_auto(0.0 + 0j).value - (-0.5)) < 1e-10
    assert abs(zeta_auto(-1.0 + 0j).value - (-1.0 / 12.0)) < 1e-10
    assert abs(zeta_auto(4.0 + 0j).value - math.pi**4 / 90) < 1e-10


def test_zeta_against_mpmath_on_strip():
    mpmath.mp.dps = 30
    rng = np.random.default_rng(5)
    for _ in range(40):
        s = complex(rng.uniform(-1.0, 2.0), rng.uniform(-100.0, 100.0))
        if abs(s - 1.0) < 0.05:
            continue
        ref = complex(mpmath.zeta(s))
        got = zeta_auto(s)
        assert abs(got.value - ref) < 1e-9 * max(1.0, abs(ref))


def test_zeta_error_estimate_is_honest():
    # observed error never exceeds 3x the reported estimate
    mpmath.mp.dps = 40
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(100):
        s = complex(rng.uniform(-1.0, 2.0), rng.uniform(-100.0, 100.0))
        if abs(s - 1.0) < 0.05:
            continue
        ref = complex(mpmath.zeta(s))
        got = zeta_auto(s)
        observed = abs(got.value - ref)
        assert observed <= 3.0 * got.abs_error_estimate
        worst = max(worst, observed / got.abs_error_estimate)
    assert worst > 0  # the bound is doing real work, not trivially huge


def test_xi_functional_equation():
    # xi(s) = xi(1-s) where xi(s) = s(s-1)/2 * pi^{-s/2} Gamma(s/2) zeta(s)
    def xi(s):
        z = zeta_auto(s).value
        gamma_half = complex(mpmath.gamma(s / 2))
        return 0.5 * s * (s - 1) * cmath.exp(-s / 2 * math.log(math.pi)) * gamma_half * z

    rng = np.random.default_rng(23)
    for _ in range(20):
        s = complex(rng.uniform(0.1, 0.9), rng.uniform(-30.0, 30.0))
        lhs, rhs = xi(s), xi(1 - s)
        assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(lhs))


def test_zeta_em_rejects_bad_parameters():
    with pytest.raises(ValidationError):
        zeta_em(2.0 + 0j, N=0, M=4)
    with pytest.raises(ValidationError):
        zeta_em(2.0 + 0j, N=10, M=13)


def test_lfun_eval_zeta_squared(zeta2_spec):
    got = lfun_eval(zeta2_spec, 2.0 + 0j)
    assert abs(got.value - (math.pi**2 / 6) ** 2) < 1e-9


def test_lfun_eval_eisenstein_is_conjugate_symmetric(eis_spec):
    # conjugate-closed shifts give real values on the real axis
    got = lfun_eval(eis_spec, 2.5 + 0j)
    assert abs(got.value.imag) < 1e-10


def test_lfun_eval_dominated_by_zeta_power(eis_spec):
    # |L(1 + eps + iT)| <= zeta(1 + eps)^degree in the convergence region
    eps = 0.25
    bound = zeta_auto(complex(1 + eps, 0)).value.real ** eis_spec.degree
    for T in (0.0, 3.0, 17.0, 61.0):
        got = lfun_eval(eis_spec, complex(1 + eps, T))
        assert abs(got.value) <= bound * (1 + 1e-9)


def test_lfun_eval_near_pole_raises(zeta_spec):
    with pytest.raises(PoleCollisionError):
        lfun_eval(zeta_spec, 1.0 + 1e-12j)


def test_residue_zeta_closed(zeta_spec):
    val = residue_at_1(zeta_spec, ResidueMethod.CLOSED)
    assert abs(val - 1.0) < 1e-12


def test_residue_zeta_richardson(zeta_spec):
    val = residue_at_1(zeta_spec, ResidueMethod.RICHARDSON)
    assert abs(val - 1.0) < 1e-6


def test_residue_eisenstein_closed_matches_oracle(eis_spec):
    # residue of zeta(s) zeta(s - i) zeta(s + i) at s = 1 is |zeta(1 + i)|^2
    mpmath.mp.dps = 30
    z = complex(mpmath.zeta(1 + 1j))
    want = (z * z.conjugate()).real
    got = residue_at_1(eis_spec, ResidueMethod.CLOSED)
    assert abs(got - want) < 1e-9 * abs(want)


def test_residue_methods_pairwise_agree(eis_spec):
    closed = residue_at_1(eis_spec, ResidueMethod.CLOSED)
    rich = residue_at_1(eis_spec, ResidueMethod.RICHARDSON)
    assert abs(closed - rich) <= 0.01 * abs(closed)


def test_residue_rs_delta_cross_method(rs_delta_spec):
    rich = residue_at_1(rs_delta_spec, ResidueMethod.RICHARDSON, prime_cutoff=20000)
    euler = residue_at_1(rs_delta_spec, ResidueMethod.EULER_PRODUCT, prime_cutoff=20000)
    assert abs(rich - euler) <= 0.01 * abs(euler)
    assert euler > 0


def test_sym2_euler_product_stabilizes():
    v1, _ = sym2_euler_product(1.0, 5000)
    v2, tail = sym2_euler_product(1.0, 20000)
    assert abs(v1 - v2) < 0.01 * abs(v2)
    assert tail > 0


def test_resolve_constant_prefers_hint(zeta_spec):
    val, method = resolve_constant(zeta_spec)
    assert val == 1.0
    assert method == "residue_hint"


def test_resolve_constant_closed_fallback(eis_spec):
    spec = eis_spec
    assert spec.residue_hint is None
    val, method = resolve_constant(spec)
    assert method == "closed"
    assert abs(val - residue_at_1(spec, ResidueMethod.CLOSED)) < 1e-12


def _dyadic_grid():
    return np.geomspace(10.0, 5200.0, 500)


def test_growth_scan_zeta_vertical_line(zeta_spec):
    fit = growth_scan(zeta_spec, 2.0, _dyadic_grid())
    # far right of the strip the function is essentially flat in t
    assert abs(fit.measured_exponent) < 0.1
    assert fit.reference_exponent == pytest.approx(0.5 * (1.05 - 2.0))


def test_growth_scan_rejects_out_of_band(zeta_spec):
    with pytest.raises(ValidationError):
        growth_scan(zeta_spec, 5.0, _dyadic_grid())


def test_growth_scan_rejects_short_grid(zeta_spec):
    with pytest.raises(ValidationError):
        growth_scan(zeta_spec, 1.0, np.geomspace(10.0, 40.0, 30))


def test_conversion_exponent_zeta(zeta_spec):
    slope = conversion_exponent_check(zeta_spec, 0.0, np.geomspace(10.0, 150.0, 200))
    assert abs(slope - 0.5) < 0.02


def test_conversion_exponent_zeta_squared(zeta2_spec):
    slope = conversion_exponent_check(zeta2_spec, 0.0, np.geomspace(10.0, 150.0, 200))
    assert abs(slope - 1.0) < 0.04


def test_conversion_exponent_central_line(zeta_spec):
    slope = conversion_exponent_check(zeta_spec, 0.5, np.geomspace(10.0, 150.0, 200))
    assert abs(slope) < 0.02
