"""Discrete calculus on spherical patches and the potential-flow operator.

The gradient on the unit sphere is D = (d/dtheta, d/dphi / sin(theta)) and
the divergence of v = (v_theta, v_phi) is
(1/sin)(d/dtheta)(sin * v_theta) + (1/sin)(d/dphi) v_phi.  All stencils are
second-order central at nodes with two masked neighbors and second-order
one-sided at patch edges and mask boundaries, so derivatives (and hence
boundary residuals for the Hopf checks) are defined up to the boundary.

The nonlinear operator evaluated by flow_residual is

    div(rho * D f) + 2 * rho * f

in conservative (flux) form with arithmetic-mean face densities, or the
termwise second-order expansion of the same equation.  Note the expanded
display carries an overall factor c^2/rho relative to the flux form; the
two evaluations agree pointwise only for gamma = 2 (where rho = c^2) or on
exact solutions.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import GridError, VacuumError
from .gas import (
    EXP_CAP,
    FlowState,
    FlowType,
    GasModel,
    GasOverflowError,
    classify_codes,
    sound_speed_sq,
)
from .grid import ScalarField, VectorField


def _shift(a, axis, off):
    """Array whose entry at index i is a[i + off]; zero-filled off the patch."""
    if off == 0:
        return a.copy()
    out = np.zeros_like(a)
    n = a.shape[axis]
    if abs(off) >= n:
        return out
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    if off > 0:
        dst[axis] = slice(0, n - off)
        src[axis] = slice(off, n)
    else:
        dst[axis] = slice(-off, n)
        src[axis] = slice(0, n + off)
    out[tuple(dst)] = a[tuple(src)]
    return out


def _shifted(a, axis, off, periodic):
    if periodic and axis == 1:
        return np.roll(a, -off, axis=1)
    return _shift(a, axis, off)


def _first_derivative(vals, avail, axis, h, periodic):
    """Mask-aware d/dx along axis: central where possible, else one-sided.

    The preferred one-sided stencil is the 4-point variant
    (-4 f0 + 7 f1 - 4 f2 + f3)/(2h) whose leading error term equals the
    central stencil's (+h^2 f'''/6), so derivative fields keep a smooth
    error across stencil switches and compositions (divergence of a
    gradient) stay second order up to the boundary.  Three-node lines fall
    back to the classical (-3, 4, -1)/(2h) stencil.  All stencils are
    written in difference form so constants are annihilated exactly.
    Raises GridError if an available node has no usable stencil.
    """
    sh = {off: _shifted(vals, axis, off, periodic)
          for off in (-3, -2, -1, 1, 2, 3)}
    av = {off: _shifted(avail, axis, off, periodic)
          for off in (-3, -2, -1, 1, 2, 3)}
    two_h = 2.0 * h

    central = av[1] & av[-1]
    fwd4 = av[1] & av[2] & av[3]
    bwd4 = av[-1] & av[-2] & av[-3]
    fwd3 = av[1] & av[2]
    bwd3 = av[-1] & av[-2]

    d = np.where(central, (sh[1] - sh[-1]) / two_h, 0.0)
    done = central
    pick = ~done & fwd4
    d = np.where(pick, (7.0 * (sh[1] - vals) - 4.0 * (sh[2] - vals)
                        + (sh[3] - vals)) / two_h, d)
    done = done | fwd4
    pick = ~done & bwd4
    d = np.where(pick, (7.0 * (vals - sh[-1]) - 4.0 * (vals - sh[-2])
                        + (vals - sh[-3])) / two_h, d)
    done = done | bwd4
    pick = ~done & fwd3
    d = np.where(pick, (4.0 * (sh[1] - vals) - (sh[2] - vals)) / two_h, d)
    done = done | fwd3
    pick = ~done & bwd3
    d = np.where(pick, (4.0 * (vals - sh[-1]) - (vals - sh[-2])) / two_h, d)

    uncovered = avail & ~(done | bwd3)
    if np.any(uncovered):
        i, j = np.argwhere(uncovered)[0]
        raise GridError(f"mask too thin for a derivative stencil at node "
                        f"({int(i)}, {int(j)})")
    return np.where(avail, d, 0.0)


def _second_derivative(vals, avail, axis, h, periodic):
    """Mask-aware d2/dx2: central 3-point, else one-sided 4-point (second
    order), degrading to the shifted 3-point stencil on 3-node lines."""
    sh = {off: _shifted(vals, axis, off, periodic) for off in (-3, -2, -1, 1, 2, 3)}
    av = {off: _shifted(avail, axis, off, periodic) for off in (-3, -2, -1, 1, 2, 3)}
    h2 = h * h

    central = av[1] & av[-1]
    fwd4 = av[1] & av[2] & av[3]
    bwd4 = av[-1] & av[-2] & av[-3]
    fwd3 = av[1] & av[2]
    bwd3 = av[-1] & av[-2]

    d = np.where(central, ((sh[1] - vals) - (vals - sh[-1])) / h2, 0.0)
    pick = ~central & fwd4
    d = np.where(pick, (-5.0 * (sh[1] - vals) + 4.0 * (sh[2] - vals)
                        - (sh[3] - vals)) / h2, d)
    done = central | fwd4
    pick = ~done & bwd4
    d = np.where(pick, (5.0 * (vals - sh[-1]) - 4.0 * (vals - sh[-2])
                        + (vals - sh[-3])) / h2, d)
    done = done | bwd4
    pick = ~done & fwd3
    d = np.where(pick, ((sh[2] - vals) - 2.0 * (sh[1] - vals)) / h2, d)
    done = done | fwd3
    pick = ~done & bwd3
    d = np.where(pick, (2.0 * (vals - sh[-1]) - (vals - sh[-2])) / h2, d)

    uncovered = avail & ~(done | bwd3)
    if np.any(uncovered):
        i, j = np.argwhere(uncovered)[0]
        raise GridError(f"mask too thin for a second-derivative stencil at "
                        f"node ({int(i)}, {int(j)})")
    return np.where(avail, d, 0.0)


def spherical_gradient(f: ScalarField) -> VectorField:
    """D f = (df/dtheta, df/dphi / sin(theta)) at every masked node."""
    grid = f.grid
    avail = grid.mask_array
    dth = _first_derivative(f.values, avail, 0, grid.h_theta, False)
    dph = _first_derivative(f.values, avail, 1, grid.h_phi, grid.phi_periodic)
    return VectorField(grid, dth, dph / grid.sin_theta[:, None])


def spherical_divergence(v: VectorField) -> ScalarField:
    """(1/sin) d/dtheta (sin * v_theta) + (1/sin) d/dphi (v_phi)."""
    grid = v.grid
    avail = grid.mask_array
    st = grid.sin_theta[:, None]
    dth = _first_derivative(st * v.v_theta, avail, 0, grid.h_theta, False)
    dph = _first_derivative(v.v_phi, avail, 1, grid.h_phi, grid.phi_periodic)
    return ScalarField(grid, np.where(avail, (dth + dph) / st, 0.0))


def field_state(gas: GasModel, f: ScalarField):
    """Node arrays (q1, q2, z, c2) for a potential field."""
    vf = spherical_gradient(f)
    q1, q2, z = vf.v_theta, vf.v_phi, f.values
    c2 = np.asarray(sound_speed_sq(gas, FlowState(q1, q2, z)), dtype=float)
    return q1, q2, z, c2


def _first_node(flagged):
    i, j = np.argwhere(flagged)[0]
    return (int(i), int(j))


def field_density(gas: GasModel, f: ScalarField):
    """(rho, c2, q1, q2) node arrays; rho is zero off the mask.

    Raises VacuumError naming the first masked node where c^2 <= 0
    (GasOverflowError for the isothermal exp() guard).
    """
    q1, q2, z, c2 = field_state(gas, f)
    m = f.grid.mask_array
    if gas.gamma == 1.0:
        arg = 0.5 * (gas.bernoulli - z * z - q1 * q1 - q2 * q2)
        bad = np.abs(arg) > EXP_CAP
        if np.any(bad & m):
            node = _first_node(bad & m)
            raise GasOverflowError(
                f"isothermal density exponent out of range at node {node}"
            )
        rho = np.where(m, gas.rho0 * np.exp(np.where(m, arg, 0.0)), 0.0)
    else:
        bad = c2 <= 0.0
        if np.any(bad & m):
            node = _first_node(bad & m)
            raise VacuumError(
                f"vacuum at node {node}: c^2 = {c2[node]:.6g} <= 0", node=node
            )
        base = np.where(m & ~bad, c2, 1.0)
        rho = np.where(m, base ** (1.0 / (gas.gamma - 1.0)), 0.0)
    return rho, c2, q1, q2


class ResidualForm(Enum):
    DIVERGENCE = "divergence"
    EXPANDED = "expanded"


def flow_residual(gas: GasModel, f: ScalarField,
                  form: ResidualForm = ResidualForm.DIVERGENCE) -> ScalarField:
    """Evaluate the potential-flow operator div(rho D f) + 2 rho f.

    DIVERGENCE uses the conservative flux stencil with arithmetic-mean face
    densities, falling back to one-sided derivatives of the node fluxes at
    patch edges and mask boundaries.  EXPANDED evaluates the second-order
    termwise expansion (which carries the c^2/rho factor noted in the
    module docstring).
    """
    grid = f.grid
    if min(np.sin(grid.theta_min), np.sin(grid.theta_max)) < grid.sin_floor:
        raise GridError("pole proximity: sin(theta) below floor")
    rho, c2, q1, q2 = field_density(gas, f)
    if form is ResidualForm.EXPANDED:
        return _expanded_residual(gas, f, c2, q1, q2)
    return _divergence_residual(gas, f, rho, q1, q2)


def _divergence_residual(gas, f, rho, q1, q2):
    grid = f.grid
    m = grid.mask_array
    st = grid.sin_theta[:, None]
    hth, hph = grid.h_theta, grid.h_phi
    per = grid.phi_periodic
    vals = f.values

    # theta direction, conservative faces at i +/- 1/2
    mp = _shift(m, 0, 1)
    mm = _shift(m, 0, -1)
    vp = _shift(vals, 0, 1)
    vm = _shift(vals, 0, -1)
    rp = _shift(rho, 0, 1)
    rm = _shift(rho, 0, -1)
    sin_face_p = np.sin(grid.thetas + 0.5 * hth)[:, None]
    sin_face_m = np.sin(grid.thetas - 0.5 * hth)[:, None]
    flux_p = sin_face_p * 0.5 * (rho + rp) * (vp - vals) / hth
    flux_m = sin_face_m * 0.5 * (rho + rm) * (vals - vm) / hth
    th_central = (flux_p - flux_m) / (st * hth)
    th_fallback = _first_derivative(st * rho * q1, m, 0, hth, False) / st
    th_part = np.where(mp & mm, th_central, th_fallback)

    # phi direction
    mpj = _shifted(m, 1, 1, per)
    mmj = _shifted(m, 1, -1, per)
    vpj = _shifted(vals, 1, 1, per)
    vmj = _shifted(vals, 1, -1, per)
    rpj = _shifted(rho, 1, 1, per)
    rmj = _shifted(rho, 1, -1, per)
    g_p = 0.5 * (rho + rpj) * (vpj - vals) / hph
    g_m = 0.5 * (rho + rmj) * (vals - vmj) / hph
    ph_central = (g_p - g_m) / (st * st * hph)
    ph_fallback = _first_derivative(rho * q2, m, 1, hph, per) / st
    ph_part = np.where(mpj & mmj, ph_central, ph_fallback)

    out = np.where(m, th_part + ph_part + 2.0 * rho * vals, 0.0)
    return ScalarField(grid, out)


def _expanded_residual(gas, f, c2, q1, q2):
    grid = f.grid
    m = grid.mask_array
    st = grid.sin_theta[:, None]
    per = grid.phi_periodic
    vals = f.values

    f_tt = _second_derivative(vals, m, 0, grid.h_theta, False)
    f_pp = _second_derivative(vals, m, 1, grid.h_phi, per)
    f_tp = _first_derivative(
        _first_derivative(vals, m, 0, grid.h_theta, False),
        m, 1, grid.h_phi, per,
    )
    cot = (np.cos(grid.thetas) / grid.sin_theta)[:, None]
    out = (
        (c2 - q1 * q1) * f_tt
        + (c2 - q2 * q2) * f_pp / (st * st)
        - 2.0 * q1 * q2 * f_tp / st
        + cot * (c2 + q2 * q2) * q1
        + (2.0 * c2 - q1 * q1 - q2 * q2) * vals
    )
    return ScalarField(grid, np.where(m, out, 0.0))


def principal_matrix(gas: GasModel, s: FlowState):
    """Second-order coefficient matrix [[c2-q1^2, -q1 q2], [-q1 q2, c2-q2^2]]."""
    c2 = sound_speed_sq(gas, s)
    return np.array([
        [c2 - s.q1 * s.q1, -s.q1 * s.q2],
        [-s.q1 * s.q2, c2 - s.q2 * s.q2],
    ])


def eigenvalue_ratio(gas: GasModel, s: FlowState) -> float:
    """lambda_max / lambda_min of the principal matrix, equal to 1/(1 - L^2).

    Only defined for strictly elliptic states; raises NotEllipticError
    otherwise.
    """
    from .errors import NotEllipticError

    c2 = sound_speed_sq(gas, s)
    if c2 <= 0.0:
        raise NotEllipticError(f"c^2 = {c2:.6g} <= 0")
    l2 = s.speed_sq() / c2
    if l2 >= 1.0:
        raise NotEllipticError(f"L^2 = {l2:.6g} >= 1")
    return 1.0 / (1.0 - l2)


@dataclass
class TypeMap:
    """Per-node classification codes and the pseudo-Mach-squared map."""

    codes: np.ndarray  # FlowType integer codes
    l2: np.ndarray     # nan where undefined (vacuum)

    def letters(self):
        lut = np.array(list("EPHV"))
        return lut[self.codes]

    def counts(self):
        return {t.letter: int(np.sum(self.codes == int(t))) for t in FlowType}


def classify_field(gas: GasModel, f: ScalarField,
                   eps_type: float = 1e-8) -> TypeMap:
    """Classify every node of a potential field by its local flow type."""
    q1, q2, z, c2 = field_state(gas, f)
    s = FlowState(q1, q2, z)
    codes = classify_codes(gas, s, eps_type)
    qsq = q1 * q1 + q2 * q2
    defined = codes != int(FlowType.VACUUM)
    with np.errstate(divide="ignore", invalid="ignore"):
        l2 = np.where(defined, qsq / np.where(defined, c2, 1.0), np.nan)
    return TypeMap(codes=codes, l2=l2)
