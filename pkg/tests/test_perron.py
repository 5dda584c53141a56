import math

import numpy as np
import pytest

from rieszlab.errors import PoleCollisionError, ResolutionError, ValidationError
from rieszlab.perron import (
    KernelParams,
    contour_residue_check,
    kernel_closed,
    kernel_quad,
    min_panels,
    truncation_scan,
)


def test_kernel_closed_values():
    assert kernel_closed(1.0, 3) == 0.0
    assert kernel_closed(0.25, 2) == 0.0
    assert kernel_closed(2.0, 1) == pytest.approx(0.5)
    assert kernel_closed(2.0, 2) == pytest.approx(0.125)
    # y -> infinity limit is 1/k!
    assert kernel_closed(1e12, 3) == pytest.approx(1.0 / 6.0, rel=1e-9)


def test_kernel_closed_rejects_k_zero():
    with pytest.raises(ValidationError):
        kernel_closed(2.0, 0)


def test_kernel_quad_converges_to_closed_form():
    for y, k in [(2.0, 1), (2.0, 2), (10.0, 3), (1.5, 2)]:
        p = KernelParams(y=y, k=k, c=1.1, T=400.0)
        q = kernel_quad(p, min_panels(y, k, p.T))
        bound = 4.0**k * y**p.c / p.T**k
        assert abs(q - kernel_closed(y, k)) <= bound


def test_kernel_quad_small_y_branch():
    # below 1 the limit is zero and the truncated integral obeys the
    # same T^-k envelope with the y-power replaced by a constant
    for y, k in [(0.5, 1), (0.5, 2), (0.1, 3)]:
        p = KernelParams(y=y, k=k, c=1.1, T=400.0)
        q = kernel_quad(p, min_panels(y, k, p.T))
        assert abs(q) <= 10.0 * 4.0**k / p.T**k


def test_kernel_quad_two_branch_symmetry():
    # magnitude for 1/y is controlled by the y-branch envelope at y = 1
    k, T = 2, 300.0
    for y in (2.0, 5.0):
        p = KernelParams(y=1.0 / y, k=k, c=1.1, T=T)
        q = kernel_quad(p, min_panels(1.0 / y, k, T))
        assert abs(q) <= 10.0 * 4.0**k / T**k


def test_kernel_quad_refuses_low_resolution():
    p = KernelParams(y=10.0, k=2, c=1.1, T=500.0)
    with pytest.raises(ResolutionError):
        kernel_quad(p, 64)


def test_kernel_quad_deterministic():
    p = KernelParams(y=3.0, k=2, c=1.05, T=250.0)
    n = min_panels(3.0, 2, 250.0)
    a = kernel_quad(p, n)
    b = kernel_quad(p, n)
    assert a == b


def test_kernel_params_validation():
    with pytest.raises(ValidationError):
        KernelParams(y=-1.0, k=1, c=1.0, T=10.0)
    with pytest.raises(ValidationError):
        KernelParams(y=2.0, k=1, c=0.0, T=10.0)
    with pytest.raises(ValidationError):
        KernelParams(y=2.0, k=1, c=1.0, T=0.5)


def test_truncation_scan_grid_validation():
    with pytest.raises(ValidationError):
        truncation_scan([2.0], [1], 1.1, [100, 200, 400])
    with pytest.raises(ValidationError):
        truncation_scan([2.0], [1], 1.1, [100, 150, 225, 340, 510])


def test_truncation_scan_decay_at_least_contract_rate():
    # the measured error must fall no slower than T^{-k}; slopes steeper
    # than the contract window are recorded honestly, not clipped
    Ts = [100.0 * 2**j for j in range(5)]
    cells = truncation_scan([0.5, 2.0], [1, 2], 1.1, Ts)
    assert len(cells) == 4
    for cell in cells:
        if cell.saturated:
            continue
        assert cell.slope is not None
        assert cell.slope <= -cell.k + 0.5
        assert cell.errors[0] > cell.errors[-1]


def test_truncation_scan_saturation_flag():
    # at y extremely close to 1 with large k, errors hit the float floor
    Ts = [200.0 * 2**j for j in range(5)]
    cells = truncation_scan([1.0], [4], 1.05, Ts)
    (cell,) = cells
    assert cell.saturated or max(cell.errors) < 1e-10


def test_contour_zeta_matches_main_residue(zeta_spec):
    x, k = 50.0, 2
    rep = contour_residue_check(zeta_spec, x, k, 1.2, 30.0, 0.4)
    want = 1.0 * x / math.factorial(k + 1)
    assert rep.residue_main == pytest.approx(want)
    assert abs(rep.integral_value - want) <= max(rep.tolerance, 1e-3 * abs(want))


def test_contour_eisenstein_includes_shifted_poles(eis_spec):
    # the box around s = 1 encloses the poles at 1 +- i as well; the
    # integral equals main + shifted residues, not the main term alone
    x, k = 50.0, 2
    rep = contour_residue_check(eis_spec, x, k, 1.2, 60.0, 0.4)
    total_pred = rep.residue_main + rep.shifted_residue_sum
    assert abs(rep.integral_value - total_pred) <= max(
        rep.tolerance, 1e-3 * abs(total_pred))
    # and the shifted part is genuinely large here
    assert abs(rep.shifted_residue_sum) > 0.1 * abs(rep.residue_main)


def test_contour_box_independence(eis_spec):
    x, k = 50.0, 2
    r1 = contour_residue_check(eis_spec, x, k, 1.2, 60.0, 0.4)
    r2 = contour_residue_check(eis_spec, x, k, 1.3, 90.0, 0.3)
    m1 = r1.integral_value - r1.shifted_residue_sum
    m2 = r2.integral_value - r2.shifted_residue_sum
    assert abs(m1 - m2) <= r1.tolerance + r2.tolerance + 1e-6 * abs(m1)


def test_contour_edges_shrink_with_T(zeta_spec):
    x, k = 50.0, 2
    sizes = []
    for T in (20.0, 40.0, 80.0):
        rep = contour_residue_check(zeta_spec, x, k, 1.2, T, 0.4)
        top, bottom = rep.horizontal_contrib
        sizes.append(abs(top) + abs(bottom) + abs(rep.left_contrib))
    assert sizes[0] > sizes[1] > sizes[2]


def test_contour_pole_collision(eis_spec):
    # T = 1 runs the horizontal edges straight through the poles at 1 +- i
    with pytest.raises(PoleCollisionError):
        contour_residue_check(eis_spec, 50.0, 2, 1.2, 1.0, 0.4)


def test_contour_rejects_bad_rectangle(zeta_spec):
    with pytest.raises(ValidationError):
        contour_residue_check(zeta_spec, 50.0, 2, 0.9, 30.0, 0.4)
