"""Executable verdicts for the weak/strong comparison principles.

Given a sub/supersolution pair (f-, f+) of the potential-flow equation,
this module evaluates every hypothesis of the comparison theorems at the
discrete level (residual signs, boundary ordering, admissibility and
ellipticity of both fields, z >= c), the mean-value linearization
coefficients averaged over the segment between the fields, the sign of the
weak-form integrand, one-sided Hopf boundary indicators, and the
strict-or-identical dichotomy.

Hypothesis failures mark a report Inapplicable, never Failed: the theorems
are conditional, and the harness must not claim a counterexample when the
premises are unmet.
"""

from dataclasses import dataclass, field as dc_field
from enum import Enum

import numpy as np

from .errors import CornerNodeError, GridError, NonTouchingNodeError, VacuumError
from .ellipticity import Z_GE_C_SLACK, _segment_density
from .gas import GasModel
from .grid import ScalarField, SphericalGrid, require_same_grid
from .operators import (
    _first_derivative,
    _shift,
    _shifted,
    field_density,
    field_state,
    flow_residual,
    spherical_gradient,
)

WEAK_FORM_TOL = 1e-10


@dataclass(eq=False)
class CoefficientFields:
    """Mean-value linearization coefficients on a shared grid.

    a is the 2x2 principal block, (b1, b2) the flux sensitivity to the
    potential value, (c1, c2) the source sensitivity to the gradient and d
    the source sensitivity to the value; all are t-averages over the
    segment between the two fields.  a12 = a21 by construction.
    """

    grid: SphericalGrid
    a11: np.ndarray
    a12: np.ndarray
    a21: np.ndarray
    a22: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    d: np.ndarray

    @classmethod
    def isotropic(cls, grid, a=1.0, d=0.0):
        """Constant-coefficient fields a*I principal part, zero b/c, d."""
        one = np.full(grid.shape, float(a))
        zero = np.zeros(grid.shape)
        return cls(grid, a11=one.copy(), a12=zero.copy(), a21=zero.copy(),
                   a22=one.copy(), b1=zero.copy(), b2=zero.copy(),
                   c1=zero.copy(), c2=zero.copy(),
                   d=np.full(grid.shape, float(d)))


def mean_value_coefficients(gas: GasModel, f_minus: ScalarField,
                            f_plus: ScalarField,
                            n_quad: int = 8) -> CoefficientFields:
    """Gauss-Legendre t-averages of the flux Jacobian over [f-, f+].

    Every quadrature state phi_t = t f- + (1-t) f+ must be admissible;
    a vacuum state raises with the offending (node, t).
    """
    grid = require_same_grid(f_minus, f_plus)
    if n_quad < 1:
        raise ValueError("n_quad must be >= 1")
    mask = grid.mask_array
    gm = spherical_gradient(f_minus)
    gp = spherical_gradient(f_plus)
    x, w = np.polynomial.legendre.leggauss(n_quad)
    ts = 0.5 * (x + 1.0)
    ws = 0.5 * w

    shape = grid.shape
    a11 = np.zeros(shape)
    a12 = np.zeros(shape)
    a22 = np.zeros(shape)
    b1 = np.zeros(shape)
    b2 = np.zeros(shape)
    d = np.zeros(shape)
    for t, wt in zip(ts, ws):
        q1 = t * gm.v_theta + (1.0 - t) * gp.v_theta
        q2 = t * gm.v_phi + (1.0 - t) * gp.v_phi
        z = t * f_minus.values + (1.0 - t) * f_plus.values
        rho, c2 = _segment_density(gas, q1, q2, z, mask, float(t))
        scale = np.where(mask, rho / np.where(mask, c2, 1.0), 0.0)
        a11 += wt * (rho - q1 * q1 * scale)
        a12 += wt * (-q1 * q2 * scale)
        a22 += wt * (rho - q2 * q2 * scale)
        b1 += wt * (-q1 * z * scale)
        b2 += wt * (-q2 * z * scale)
        d += wt * 2.0 * (rho - z * z * scale)
    return CoefficientFields(
        grid, a11=a11, a12=a12, a21=a12.copy(), a22=a22,
        b1=b1, b2=b2, c1=2.0 * b1, c2=2.0 * b2, d=d,
    )


def linearized_operator(coeffs: CoefficientFields, interior_only: bool = False):
    """Closure applying the conservative linearized stencil to value arrays.

    The second-order part goes through face-averaged coefficients (so the
    divergence structure of the nonlinear operator is preserved); patch
    edges and mask boundaries fall back to one-sided derivatives of the
    node fluxes unless interior_only skips them (the solver path).
    """
    grid = coeffs.grid
    m = grid.mask_array
    st = grid.sin_theta[:, None]
    hth, hph = grid.h_theta, grid.h_phi
    per = grid.phi_periodic

    a11f = 0.5 * (coeffs.a11 + _shift(coeffs.a11, 0, 1))
    a12f = 0.5 * (coeffs.a12 + _shift(coeffs.a12, 0, 1))
    b1f = 0.5 * (coeffs.b1 + _shift(coeffs.b1, 0, 1))
    sin_face = np.sin(grid.thetas + 0.5 * hth)[:, None]
    ok_th = _shift(m, 0, 1) & _shift(m, 0, -1)

    a21f = 0.5 * (coeffs.a21 + _shifted(coeffs.a21, 1, 1, per))
    a22f = 0.5 * (coeffs.a22 + _shifted(coeffs.a22, 1, 1, per))
    b2f = 0.5 * (coeffs.b2 + _shifted(coeffs.b2, 1, 1, per))
    ok_ph = _shifted(m, 1, 1, per) & _shifted(m, 1, -1, per)

    def apply(hvals):
        g1 = _first_derivative(hvals, m, 0, hth, False)
        g2 = _first_derivative(hvals, m, 1, hph, per) / st

        hp = _shift(hvals, 0, 1)
        flux = sin_face * (
            a11f * (hp - hvals) / hth
            + a12f * 0.5 * (g2 + _shift(g2, 0, 1))
            + b1f * 0.5 * (hvals + hp)
        )
        th = (flux - _shift(flux, 0, -1)) / (st * hth)

        hpj = _shifted(hvals, 1, 1, per)
        gphi = (
            a21f * 0.5 * (g1 + _shifted(g1, 1, 1, per))
            + a22f * (hpj - hvals) / (hph * st)
            + b2f * 0.5 * (hvals + hpj)
        )
        ph = (gphi - _shifted(gphi, 1, -1, per)) / (st * hph)

        out = coeffs.c1 * g1 + coeffs.c2 * g2 + coeffs.d * hvals
        if interior_only:
            out = out + np.where(ok_th, th, 0.0) + np.where(ok_ph, ph, 0.0)
        else:
            v1 = coeffs.a11 * g1 + coeffs.a12 * g2 + coeffs.b1 * hvals
            v2 = coeffs.a21 * g1 + coeffs.a22 * g2 + coeffs.b2 * hvals
            fb_th = _first_derivative(st * v1, m, 0, hth, False) / st
            fb_ph = _first_derivative(v2, m, 1, hph, per) / st
            out = out + np.where(ok_th, th, fb_th) + np.where(ok_ph, ph, fb_ph)
        return np.where(m, out, 0.0)

    return apply


def linearized_diag(coeffs: CoefficientFields) -> np.ndarray:
    """Diagonal (center-weight) of the conservative linearized stencil.

    Valid at interior nodes; used as the Jacobi preconditioner.
    """
    grid = coeffs.grid
    st = grid.sin_theta[:, None]
    hth, hph = grid.h_theta, grid.h_phi
    per = grid.phi_periodic

    a11f = 0.5 * (coeffs.a11 + _shift(coeffs.a11, 0, 1))
    b1f = 0.5 * (coeffs.b1 + _shift(coeffs.b1, 0, 1))
    a11fm = _shift(a11f, 0, -1)
    b1fm = _shift(b1f, 0, -1)
    sin_p = np.sin(grid.thetas + 0.5 * hth)[:, None]
    sin_m = np.sin(grid.thetas - 0.5 * hth)[:, None]
    center = (sin_p * (-a11f / hth + 0.5 * b1f)
              - sin_m * (a11fm / hth + 0.5 * b1fm)) / (st * hth)

    a22f = 0.5 * (coeffs.a22 + _shifted(coeffs.a22, 1, 1, per))
    b2f = 0.5 * (coeffs.b2 + _shifted(coeffs.b2, 1, 1, per))
    a22fm = _shifted(a22f, 1, -1, per)
    b2fm = _shifted(b2f, 1, -1, per)
    center += ((-a22f / (hph * st) + 0.5 * b2f)
               - (a22fm / (hph * st) + 0.5 * b2fm)) / (st * hph)
    return center + coeffs.d


def apply_linearized(coeffs: CoefficientFields, h: ScalarField) -> ScalarField:
    """(1/sin) d_i(sin (a_ij d_j h + b_i h)) + c_i d_i h + d h."""
    if not coeffs.grid.same_geometry(h.grid):
        raise GridError("coefficient fields and h do not share a grid")
    return ScalarField(coeffs.grid, linearized_operator(coeffs)(h.values))


def weak_form_field(gas: GasModel, f_minus: ScalarField, f_plus: ScalarField,
                    beta: float = 0.5, n_quad: int = 8) -> np.ndarray:
    """Weak-form integrand F at every node.

    F = (1/beta) (h+)^(1/beta - 1) (a_ij di h+ dj h+ + b_i h+ di h+
        - beta c_i h+ di h+ - beta d (h+)^2)  with h+ = max(f- - f+, 0).

    Gradients of h+ are taken where h+ > 0 and set to zero elsewhere
    (h+ is only Lipschitz across its free boundary).
    """
    grid = require_same_grid(f_minus, f_plus)
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    co = mean_value_coefficients(gas, f_minus, f_plus, n_quad)
    m = grid.mask_array
    st = grid.sin_theta[:, None]
    hplus = np.where(m, np.maximum(f_minus.values - f_plus.values, 0.0), 0.0)
    pos = hplus > 0.0
    g1 = np.where(pos, _first_derivative(hplus, m, 0, grid.h_theta, False), 0.0)
    g2 = np.where(
        pos,
        _first_derivative(hplus, m, 1, grid.h_phi, grid.phi_periodic) / st,
        0.0,
    )
    quad = (
        co.a11 * g1 * g1 + (co.a12 + co.a21) * g1 * g2 + co.a22 * g2 * g2
        + co.b1 * hplus * g1 + co.b2 * hplus * g2
        - beta * (co.c1 * hplus * g1 + co.c2 * hplus * g2)
        - beta * co.d * hplus * hplus
    )
    prefactor = np.where(pos, hplus ** (1.0 / beta - 1.0), 0.0) / beta
    return np.where(m, prefactor * quad, 0.0)


def weak_form_integrand(gas: GasModel, f_minus: ScalarField,
                        f_plus: ScalarField, beta: float, node,
                        n_quad: int = 8) -> float:
    """F at a single (i, j) node; see weak_form_field."""
    F = weak_form_field(gas, f_minus, f_plus, beta, n_quad)
    i, j = node
    return float(F[int(i), int(j)])


class Dichotomy(Enum):
    STRICT = "Strict"
    IDENTICAL = "Identical"
    ANOMALOUS = "Anomalous"


@dataclass
class HypothesisResult:
    passed: bool
    worst_node: tuple | None
    value: float | None

    def to_dict(self):
        node = None
        if self.worst_node is not None:
            node = {"i": int(self.worst_node[0]), "j": int(self.worst_node[1])}
        return {"pass": bool(self.passed), "worst_node": node,
                "value": self.value}


@dataclass
class HopfResult:
    i: int
    j: int
    theta: float
    phi: float
    derivative: float

    def to_dict(self):
        return {"i": self.i, "j": self.j, "theta": self.theta,
                "phi": self.phi, "derivative": self.derivative}


# Conclusion-chain checks that do not gate applicability.
_NON_GATING = ("weak_form_nonnegative",)


@dataclass
class ComparisonReport:
    hypotheses: dict
    interior_min_gap: float
    interior_max_abs_gap: float
    min_gap_node: tuple
    min_gap_grad: tuple
    ordering_pass: bool
    typo_reading_a_pass: bool
    typo_reading_b_pass: bool
    dichotomy: Dichotomy | None = None
    hopf: list = dc_field(default_factory=list)

    @property
    def applicable(self) -> bool:
        return all(h.passed for name, h in self.hypotheses.items()
                   if name not in _NON_GATING)

    @property
    def verdict(self) -> str:
        if not self.applicable:
            return "Inapplicable"
        return "Pass" if self.ordering_pass else "Failed"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "applicable": self.applicable,
            "hypotheses": {k: v.to_dict() for k, v in self.hypotheses.items()},
            "interior_min_gap": self.interior_min_gap,
            "interior_max_abs_gap": self.interior_max_abs_gap,
            "min_gap_node": {"i": int(self.min_gap_node[0]),
                             "j": int(self.min_gap_node[1])},
            "min_gap_grad": list(self.min_gap_grad),
            "ordering_pass": self.ordering_pass,
            "dichotomy": self.dichotomy.value if self.dichotomy else None,
            "hopf": [h.to_dict() for h in self.hopf],
            "typo_reading_A_pass": self.typo_reading_a_pass,
            "typo_reading_B_pass": self.typo_reading_b_pass,
        }


def _extreme(arr, region, minimize):
    masked = np.where(region, arr, np.inf if minimize else -np.inf)
    flat = int(np.argmin(masked) if minimize else np.argmax(masked))
    i, j = np.unravel_index(flat, arr.shape)
    return float(masked[i, j]), (int(i), int(j))


def verify_weak_comparison(gas: GasModel, f_minus: ScalarField,
                           f_plus: ScalarField, tol_sub: float = 1e-9,
                           tol_order: float = 1e-8, beta: float = 0.5,
                           n_quad: int = 8) -> ComparisonReport:
    """Check every hypothesis and the interior ordering for a field pair.

    Hypotheses (gating): residual signs of the sub/supersolution at
    interior nodes, boundary ordering, rho > 0 and L^2 < 1 for both fields
    (the supersolution Mach condition in both literature readings: the
    plain (f+, f+) one and the mixed one using the subsolution value in
    the sound speed), and z >= c for both fields.  The weak-form
    nonnegativity is recorded alongside but does not gate applicability,
    being a consequence rather than a premise.
    """
    grid = require_same_grid(f_minus, f_plus)
    m = grid.mask_array
    im = grid.interior_mask
    bm = grid.boundary_mask
    hyp = {}

    res_minus = flow_residual(gas, f_minus).values
    v, node = _extreme(res_minus, im, minimize=True)
    hyp["subsolution_sign"] = HypothesisResult(v >= -tol_sub, node, v)

    res_plus = flow_residual(gas, f_plus).values
    v, node = _extreme(res_plus, im, minimize=False)
    hyp["supersolution_sign"] = HypothesisResult(v <= tol_sub, node, v)

    bgap = f_minus.values - f_plus.values
    v, node = _extreme(bgap, bm, minimize=False)
    hyp["boundary_ordering"] = HypothesisResult(v <= tol_order, node, v)

    rho_m, c2_m, q1m, q2m = field_density(gas, f_minus)
    rho_p, c2_p, q1p, q2p = field_density(gas, f_plus)
    for tag, rho in (("minus", rho_m), ("plus", rho_p)):
        v, node = _extreme(rho, m, minimize=True)
        hyp[f"rho_positive_{tag}"] = HypothesisResult(v > 0.0, node, v)

    l2_m = (q1m * q1m + q2m * q2m) / np.where(m, c2_m, 1.0)
    v, node = _extreme(l2_m, m, minimize=False)
    hyp["mach_elliptic_minus"] = HypothesisResult(v < 1.0, node, v)

    qsq_p = q1p * q1p + q2p * q2p
    l2_a = qsq_p / np.where(m, c2_p, 1.0)
    v, node = _extreme(l2_a, m, minimize=False)
    hyp["mach_elliptic_plus_reading_a"] = HypothesisResult(v < 1.0, node, v)

    if gas.gamma == 1.0:
        c2_mixed = np.ones_like(c2_p)
    else:
        zm = f_minus.values
        c2_mixed = gas.c0_sq + 0.5 * (gas.gamma - 1.0) * (
            gas.bernoulli - zm * zm - qsq_p)
    ok = c2_mixed > 0.0
    l2_b = np.where(ok, qsq_p / np.where(ok, c2_mixed, 1.0), np.inf)
    v, node = _extreme(l2_b, m, minimize=False)
    hyp["mach_elliptic_plus_reading_b"] = HypothesisResult(v < 1.0, node, v)

    for tag, (z, c2) in (("minus", (f_minus.values, c2_m)),
                         ("plus", (f_plus.values, c2_p))):
        zgap = z - np.sqrt(np.where(m, c2, 1.0))
        v, node = _extreme(zgap, m, minimize=True)
        hyp[f"z_above_sound_{tag}"] = HypothesisResult(
            v >= -Z_GE_C_SLACK, node, v)

    F = weak_form_field(gas, f_minus, f_plus, beta, n_quad)
    v, node = _extreme(F, m, minimize=True)
    hyp["weak_form_nonnegative"] = HypothesisResult(v >= -WEAK_FORM_TOL, node, v)

    gap = f_plus.values - f_minus.values
    min_gap, gap_node = _extreme(gap, im, minimize=True)
    max_abs, _ = _extreme(np.abs(gap), im, minimize=False)
    gdiff = spherical_gradient(ScalarField(grid, f_minus.values - f_plus.values))
    grad_at = (float(gdiff.v_theta[gap_node]), float(gdiff.v_phi[gap_node]))

    return ComparisonReport(
        hypotheses=hyp,
        interior_min_gap=min_gap,
        interior_max_abs_gap=max_abs,
        min_gap_node=gap_node,
        min_gap_grad=grad_at,
        ordering_pass=min_gap >= -tol_order,
        typo_reading_a_pass=hyp["mach_elliptic_plus_reading_a"].passed,
        typo_reading_b_pass=hyp["mach_elliptic_plus_reading_b"].passed,
    )


def _outward_directions(grid: SphericalGrid, i: int, j: int):
    """Directions in which node (i, j) has no masked neighbor."""
    m = grid.mask_array
    nth, nph = grid.shape
    per = grid.phi_periodic
    dirs = []
    if i + 1 >= nth or not m[i + 1, j]:
        dirs.append((1, 0))
    if i - 1 < 0 or not m[i - 1, j]:
        dirs.append((-1, 0))
    jp = (j + 1) % nph if per else j + 1
    jm = (j - 1) % nph if per else j - 1
    if jp >= nph or not m[i, jp]:
        dirs.append((0, 1))
    if jm < 0 or not m[i, jm]:
        dirs.append((0, -1))
    return dirs


def straight_edge_nodes(grid: SphericalGrid) -> list:
    """Boundary nodes with exactly one outward direction (no corners)."""
    out = []
    for i, j in np.argwhere(grid.boundary_mask):
        if len(_outward_directions(grid, int(i), int(j))) == 1:
            out.append((int(i), int(j)))
    return out


def hopf_indicator(gas: GasModel, f_minus: ScalarField, f_plus: ScalarField,
                   boundary_nodes, tol_touch: float = 1e-9,
                   tol_order: float = 1e-8) -> list:
    """One-sided outward-normal derivative of (f- - f+) at touching nodes.

    Every requested node must be a boundary node with exactly one outward
    direction (straight mask edge; corners fail the interior sphere
    condition), must carry equal field values within tol_touch, and both
    fields must be vacuum-free there.  When f- < f+ holds inside and the
    ellipticity hypotheses are met, the returned derivatives are the
    quantities the Hopf lemma asserts to be strictly positive.
    """
    grid = require_same_grid(f_minus, f_plus)
    m = grid.mask_array
    bm = grid.boundary_mask
    im = grid.interior_mask
    per = grid.phi_periodic
    nth, nph = grid.shape

    gap = f_plus.values - f_minus.values
    min_gap, node = _extreme(gap, im, minimize=True)
    if min_gap < -tol_order:
        raise ValueError(
            f"f_minus exceeds f_plus at interior node {node} by {-min_gap:.3e}"
        )
    diff = f_minus.values - f_plus.values

    _, _, _, c2m = field_state(gas, f_minus)
    _, _, _, c2p = field_state(gas, f_plus)

    def inner(i, j, di, dj, steps):
        ii = i - di * steps
        jj = j - dj * steps
        if per:
            jj %= nph
        return ii, jj

    results = []
    for raw in boundary_nodes:
        i, j = int(raw[0]), int(raw[1])
        if not bm[i, j]:
            raise ValueError(f"node ({i}, {j}) is not a boundary node")
        if abs(diff[i, j]) > tol_touch:
            raise NonTouchingNodeError(
                f"fields differ by {abs(diff[i, j]):.3e} at node ({i}, {j})"
            )
        if gas.gamma != 1.0 and (c2m[i, j] <= 0.0 or c2p[i, j] <= 0.0):
            raise VacuumError(f"vacuum state at node ({i}, {j})",
                              node=(i, j))
        dirs = _outward_directions(grid, i, j)
        if len(dirs) != 1:
            raise CornerNodeError(
                f"node ({i}, {j}) has {len(dirs)} outward directions; "
                "interior sphere condition unverifiable"
            )
        di, dj = dirs[0]
        i1, j1 = inner(i, j, di, dj, 1)
        i2, j2 = inner(i, j, di, dj, 2)

        def in_patch(ii, jj):
            return 0 <= ii < nth and 0 <= jj < nph

        if not (in_patch(i1, j1) and in_patch(i2, j2)
                and m[i1, j1] and m[i2, j2]):
            raise GridError(
                f"mask too thin for a one-sided normal stencil at ({i}, {j})"
            )
        h = grid.h_theta if di != 0 else grid.h_phi * grid.sin_theta[i]
        deriv = (3.0 * diff[i, j] - 4.0 * diff[i1, j1] + diff[i2, j2]) / (2.0 * h)
        results.append(HopfResult(
            i=i, j=j, theta=float(grid.thetas[i]), phi=float(grid.phis[j]),
            derivative=float(deriv),
        ))
    return results


def strong_comparison_check(report: ComparisonReport,
                            gap_tol: float = 1e-10) -> Dichotomy:
    """Classify an ordered pair as Strict, Identical or Anomalous.

    Anomalous means an interior touching point between non-identical
    ordered fields, which cannot occur for exact elliptic solutions; at
    the discrete level it flags a hypothesis breach or discretization
    error, with the near-touching node and the gradient of (f- - f+)
    there available on the report.
    """
    if not report.applicable:
        raise ValueError("hypotheses failed; dichotomy undefined (Inapplicable)")
    if not report.ordering_pass:
        raise ValueError("interior ordering violated; dichotomy undefined")
    if report.interior_max_abs_gap <= gap_tol:
        report.dichotomy = Dichotomy.IDENTICAL
    elif report.interior_min_gap > gap_tol:
        report.dichotomy = Dichotomy.STRICT
    else:
        report.dichotomy = Dichotomy.ANOMALOUS
    return report.dichotomy
