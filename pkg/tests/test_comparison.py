import numpy as np
import pytest

from helpers import SMALL_PATCH, WIDE_PATCH

import sphereflow as sf
from sphereflow import (
    CoefficientFields,
    Dichotomy,
    GasModel,
    ScalarField,
    SphericalGrid,
)
from sphereflow.comparison import weak_form_field


@pytest.fixture(scope="module")
def solver_pair():
    """gamma=2 pair: N f+ = 0, N f- = 0.05, boundary margin 0.01."""
    gas = GasModel(2.0, 1.0, 4.0)
    grid = SphericalGrid(*SMALL_PATCH, 33, 33)
    bnd = ScalarField.from_function(grid, lambda th, ph: 1.6 + 0.1 * np.cos(th))
    bnd_low = ScalarField(grid, bnd.values - 0.01)
    zero = ScalarField.constant(grid, 0.0)
    src = ScalarField.constant(grid, 0.05)
    f_plus, _ = sf.solve_dirichlet(
        sf.BVProblem(gas=gas, grid=grid, boundary=bnd, source=zero))
    f_minus, _ = sf.solve_dirichlet(
        sf.BVProblem(gas=gas, grid=grid, boundary=bnd_low, source=src))
    f_touch, _ = sf.solve_dirichlet(
        sf.BVProblem(gas=gas, grid=grid, boundary=bnd, source=src))
    return gas, grid, f_plus, f_minus, f_touch


def test_mean_value_coefficients_constant(gas_b4, wide_grid_33):
    f = ScalarField.constant(wide_grid_33, 2.0)
    co = sf.mean_value_coefficients(gas_b4, f, f, n_quad=8)
    np.testing.assert_allclose(co.a11, 1.0, atol=1e-14)
    np.testing.assert_allclose(co.a22, 1.0, atol=1e-14)
    np.testing.assert_allclose(co.a12, 0.0, atol=1e-15)
    np.testing.assert_allclose(co.b1, 0.0, atol=1e-15)
    np.testing.assert_allclose(co.c2, 0.0, atol=1e-15)
    # d = 2 rho + 2 z (d rho/d z) = 2 - 8
    np.testing.assert_allclose(co.d, -6.0, atol=1e-14)
    np.testing.assert_array_equal(co.a12, co.a21)


def test_mean_value_zero_gap_any_quadrature(gas_b4, wide_grid_33):
    f = ScalarField.from_function(wide_grid_33,
                                  lambda th, ph: 2 + 0.1 * np.cos(th))
    c1 = sf.mean_value_coefficients(gas_b4, f, f, n_quad=1)
    c8 = sf.mean_value_coefficients(gas_b4, f, f, n_quad=8)
    for name in ("a11", "a12", "a22", "b1", "b2", "c1", "c2", "d"):
        np.testing.assert_allclose(getattr(c1, name), getattr(c8, name),
                                   rtol=0, atol=1e-13)


def test_mean_value_gauss_convergence(gas_b4, wide_grid_33):
    lo = ScalarField.constant(wide_grid_33, 2.0)
    hi = ScalarField.constant(wide_grid_33, 2.2)
    c8 = sf.mean_value_coefficients(gas_b4, lo, hi, n_quad=8)
    c16 = sf.mean_value_coefficients(gas_b4, lo, hi, n_quad=16)
    for name in ("a11", "a12", "a22", "b1", "b2", "c1", "c2", "d"):
        np.testing.assert_allclose(getattr(c8, name), getattr(c16, name),
                                   rtol=0, atol=1e-12)


def test_mean_value_vacuum_on_segment(gas_b4, wide_grid_33):
    lo = ScalarField.constant(wide_grid_33, 2.6)
    hi = ScalarField.constant(wide_grid_33, 2.6)
    with pytest.raises(sf.VacuumError) as err:
        sf.mean_value_coefficients(gas_b4, lo, hi)
    assert err.value.t is not None


def test_mean_value_grid_mismatch(gas_b4):
    g1 = SphericalGrid(*WIDE_PATCH, 9, 9)
    g2 = SphericalGrid(*WIDE_PATCH, 11, 9)
    with pytest.raises(sf.GridMismatchError):
        sf.mean_value_coefficients(gas_b4, ScalarField.constant(g1, 2.0),
                                   ScalarField.constant(g2, 2.0))


def test_apply_linearized_zero(gas_b4, wide_grid_33):
    co = CoefficientFields.isotropic(wide_grid_33, a=1.0, d=-6.0)
    out = sf.apply_linearized(co, ScalarField.constant(wide_grid_33, 0.0))
    assert np.all(out.values == 0.0)


def test_apply_linearized_laplacian_plus_zeroth_order():
    g = SphericalGrid(np.pi / 4, 3 * np.pi / 4, 0.0, np.pi / 2, 49, 49)
    co = CoefficientFields.isotropic(g, a=1.0, d=-6.0)
    h = ScalarField.from_function(g, lambda th, ph: np.cos(th))
    out = sf.apply_linearized(co, h)
    i = 8  # node at theta = pi/3
    assert g.thetas[i] == pytest.approx(np.pi / 3, abs=1e-12)
    j = 24
    # Delta cos = -2 cos, so the operator gives -8 cos(pi/3) = -4
    assert out.values[i, j] == pytest.approx(-4.0, abs=5e-3)


def test_linearization_matches_frechet_derivative(gas_b4, wide_grid_33):
    g = wide_grid_33
    phi = ScalarField.from_function(g, lambda th, ph: 2 + 0.1 * np.cos(th))
    h = ScalarField.from_function(
        g, lambda th, ph: 0.1 * (np.sin(th) * np.sin(ph) + np.cos(th)))
    co = sf.mean_value_coefficients(gas_b4, phi, phi, n_quad=1)
    lin = sf.apply_linearized(co, h).values
    eps = 1e-6
    r0 = sf.flow_residual(gas_b4, phi).values
    r1 = sf.flow_residual(
        gas_b4, ScalarField(g, phi.values + eps * h.values)).values
    fd = (r1 - r0) / eps
    assert np.abs(lin - fd)[g.interior_mask].max() < 1e-3


def test_weak_form_zero_when_ordered(gas_b4, wide_grid_33):
    lo = ScalarField.constant(wide_grid_33, 2.0)
    hi = ScalarField.constant(wide_grid_33, 2.2)
    F = weak_form_field(gas_b4, lo, hi, beta=0.5)
    assert np.all(F == 0.0)
    assert sf.weak_form_integrand(gas_b4, lo, hi, 0.5, (3, 3)) == 0.0


def test_weak_form_positive_from_zeroth_order(gas_b4, wide_grid_33):
    # h+ = 0.2 constant: gradients vanish, F = -2 beta d (h+)^3 / (2 beta)
    lo = ScalarField.constant(wide_grid_33, 2.2)
    hi = ScalarField.constant(wide_grid_33, 2.0)
    co = sf.mean_value_coefficients(gas_b4, lo, hi, n_quad=8)
    F = sf.weak_form_integrand(gas_b4, lo, hi, 0.5, (5, 5))
    d_val = co.d[5, 5]
    assert d_val < 0.0
    expected = 2.0 * 0.2 * (-0.5 * d_val * 0.04)
    assert F == pytest.approx(expected, rel=1e-12)
    assert F > 0.0


def test_weak_form_beta_one_has_no_prefactor(gas_b4, wide_grid_33):
    lo = ScalarField.constant(wide_grid_33, 2.2)
    hi = ScalarField.constant(wide_grid_33, 2.0)
    co = sf.mean_value_coefficients(gas_b4, lo, hi, n_quad=8)
    F1 = weak_form_field(gas_b4, lo, hi, beta=1.0)
    expected = -1.0 * co.d * 0.04  # - beta d (h+)^2 with beta = 1
    np.testing.assert_allclose(F1[wide_grid_33.interior_mask],
                               expected[wide_grid_33.interior_mask],
                               rtol=1e-12)


def test_weak_form_algebraic_identity(gas_b4):
    # beta F (h+)^(1 - 1/beta) equals the quadratic form wherever h+ > 0
    g = SphericalGrid(*WIDE_PATCH, 17, 17)
    rng = np.random.default_rng(3)
    lo = ScalarField(g, 2.05 + 0.02 * rng.random(g.shape))
    hi = ScalarField.constant(g, 2.0)
    beta = 0.5
    co = sf.mean_value_coefficients(gas_b4, lo, hi)
    F = weak_form_field(gas_b4, lo, hi, beta=beta)
    from sphereflow.operators import _first_derivative
    m = g.mask_array
    hplus = np.maximum(lo.values - hi.values, 0.0)
    g1 = _first_derivative(hplus, m, 0, g.h_theta, False)
    g2 = _first_derivative(hplus, m, 1, g.h_phi, False) / g.sin_theta[:, None]
    quad = (co.a11 * g1 * g1 + (co.a12 + co.a21) * g1 * g2
            + co.a22 * g2 * g2 + co.b1 * hplus * g1 + co.b2 * hplus * g2
            - beta * (co.c1 * hplus * g1 + co.c2 * hplus * g2)
            - beta * co.d * hplus * hplus)
    pos = hplus > 0
    lhs = beta * F[pos] * hplus[pos] ** (1.0 - 1.0 / beta)
    np.testing.assert_allclose(lhs, quad[pos], rtol=0, atol=1e-10)


def test_verify_solver_pair(solver_pair):
    gas, grid, f_plus, f_minus, _ = solver_pair
    rep = sf.verify_weak_comparison(gas, f_minus, f_plus)
    assert rep.verdict == "Pass"
    assert rep.applicable
    assert all(h.passed for h in rep.hypotheses.values())
    assert rep.interior_min_gap > 0.0
    assert rep.typo_reading_a_pass and rep.typo_reading_b_pass
    assert sf.strong_comparison_check(rep) is Dichotomy.STRICT
    d = rep.to_dict()
    assert d["dichotomy"] == "Strict"
    assert d["ordering_pass"] is True


def test_verify_swapped_roles_inapplicable(solver_pair):
    gas, grid, f_plus, f_minus, _ = solver_pair
    rep = sf.verify_weak_comparison(gas, f_plus, f_minus)
    assert rep.verdict == "Inapplicable"
    assert not rep.hypotheses["boundary_ordering"].passed


def test_verify_identical_fields(solver_pair):
    gas, grid, f_plus, _, _ = solver_pair
    rep = sf.verify_weak_comparison(gas, f_plus, f_plus)
    assert rep.verdict == "Pass"
    assert rep.interior_min_gap == 0.0
    assert rep.hypotheses["weak_form_nonnegative"].value == 0.0
    assert sf.strong_comparison_check(rep) is Dichotomy.IDENTICAL


def test_hopf_zero_for_identical_fields(solver_pair):
    gas, grid, f_plus, _, _ = solver_pair
    nodes = sf.straight_edge_nodes(grid)
    out = sf.hopf_indicator(gas, f_plus, f_plus, nodes)
    assert len(out) == len(nodes)
    assert all(h.derivative == 0.0 for h in out)


def test_hopf_positive_for_touching_pair(solver_pair):
    gas, grid, f_plus, _, f_touch = solver_pair
    mid = 16
    nodes = [(0, mid), (32, mid), (mid, 0), (mid, 32)]
    out = sf.hopf_indicator(gas, f_touch, f_plus, nodes)
    assert all(h.derivative > 0.0 for h in out)


def test_hopf_corner_and_nontouching_errors(solver_pair):
    gas, grid, f_plus, f_minus, f_touch = solver_pair
    with pytest.raises(sf.CornerNodeError):
        sf.hopf_indicator(gas, f_touch, f_plus, [(0, 0)])
    # margin pair does not touch on the boundary
    with pytest.raises(sf.NonTouchingNodeError):
        sf.hopf_indicator(gas, f_minus, f_plus, [(0, 16)])


def test_hopf_one_dimensional_sanity(gas_b4):
    g = SphericalGrid(*WIDE_PATCH, 65, 65)
    a, b = g.theta_min, g.theta_max
    amp = 0.5
    base = ScalarField.constant(g, 1.6)
    bump = ScalarField(
        g, base.values - amp * np.sin(g.theta_mesh - a) * np.sin(b - g.theta_mesh))
    out = sf.hopf_indicator(gas_b4, bump, base, [(0, 32), (64, 32)])
    expect = amp * np.sin(b - a)
    for h in out:
        assert h.derivative == pytest.approx(expect, abs=5e-3 * amp)


def test_anomalous_fixture_detected(gas_b4):
    g = SphericalGrid(*WIDE_PATCH, 17, 17)
    ic, jc = 8, 8
    d = 0.05 * ((g.theta_mesh - g.thetas[ic]) ** 2
                + (g.phi_mesh - g.phis[jc]) ** 2)
    lo = ScalarField.constant(g, 2.0)
    hi = ScalarField(g, 2.0 + d)
    rep = sf.verify_weak_comparison(gas_b4, lo, hi)
    # hand-built fields are not discrete sub/supersolutions; force the
    # hypotheses green to exercise the dichotomy detector alone
    for h in rep.hypotheses.values():
        h.passed = True
    assert rep.ordering_pass
    assert sf.strong_comparison_check(rep) is Dichotomy.ANOMALOUS
    assert rep.min_gap_node == (ic, jc)
    # the touching point carries a vanishing gradient of (f- - f+)
    assert np.hypot(*rep.min_gap_grad) < 1e-10


def test_strong_check_precondition_error(solver_pair):
    gas, grid, f_plus, f_minus, _ = solver_pair
    rep = sf.verify_weak_comparison(gas, f_plus, f_minus)  # swapped
    with pytest.raises(ValueError):
        sf.strong_comparison_check(rep)
