"""Ellipticity algebra: the 3x3 comparison matrix, its lower bound,
segment-set condition sweeps, and uniform-ellipticity certificates.

The comparison matrix packs the (q, z)-Jacobian of the flow fluxes
A = rho * q (tangential mass flux) and B = 2 * rho * z (radial source),
with the last column weighted by -beta.  Its quadratic form controls the
sign structure that the weak comparison principle rests on: under
rho > 0, L^2 < 1 and z >= c the form is nonnegative, and strictly
positive whenever the tangential part of the test vector is nonzero.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import VacuumError
from .gas import EXP_CAP, FlowState, GasModel, GasOverflowError, density, \
    density_partials, sound_speed_sq
from .grid import ScalarField, require_same_grid
from .operators import field_density, spherical_gradient

# Roundoff slack for the z >= c hypothesis (equality is permitted).
Z_GE_C_SLACK = 1e-12


@dataclass(frozen=True)
class ComparisonMatrix:
    """3x3 flux-Jacobian matrix with beta-weighted last column."""

    entries: np.ndarray
    beta: float

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.shape != (3, 3):
            raise ValueError("comparison matrix must be 3x3")
        object.__setattr__(self, "entries", e)


def comparison_matrix(gas: GasModel, s: FlowState, beta: float = 0.5) -> ComparisonMatrix:
    """Assemble the matrix from the analytic density partials.

    Row i holds (d A1, d A2, -beta d B) by q_i (and by z in the last row).
    At beta = 1/2 this reduces to
    (1/rho^(gamma-2)) [[c2-q1^2, -q1 q2, q1 z], [-q1 q2, c2-q2^2, q2 z],
    [-q1 z, -q2 z, z^2-c2]].
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1]")
    rho = density(gas, s)
    dq1, dq2, dz = density_partials(gas, s)
    q1, q2, z = s.q1, s.q2, s.z
    h = np.array([
        [rho + q1 * dq1, q2 * dq1, -beta * 2.0 * z * dq1],
        [q1 * dq2, rho + q2 * dq2, -beta * 2.0 * z * dq2],
        [q1 * dz, q2 * dz, -beta * (2.0 * rho + 2.0 * z * dz)],
    ])
    return ComparisonMatrix(h, beta)


def quadratic_form_and_bound(H: ComparisonMatrix, gas: GasModel, s: FlowState,
                             xi) -> tuple[float, float]:
    """(sum H_ij xi_i xi_j, Schwartz lower bound) at a beta = 1/2 matrix.

    The bound is (1/rho^(gamma-2)) ((c2-|q|^2)(xi1^2+xi2^2) + (z^2-c2) xi3^2)
    and form >= bound holds for every xi.
    """
    xi = np.asarray(xi, dtype=float)
    form = float(xi @ H.entries @ xi)
    rho = density(gas, s)
    c2 = sound_speed_sq(gas, s)
    scale = rho / c2  # rho^(2-gamma) under c^2 = rho^(gamma-1)
    bound = scale * (
        (c2 - s.speed_sq()) * (xi[0] ** 2 + xi[1] ** 2)
        + (s.z * s.z - c2) * xi[2] ** 2
    )
    return form, float(bound)


@dataclass
class NodeViolation:
    i: int
    j: int
    t: float
    condition: str
    value: float

    def to_dict(self):
        return {"i": self.i, "j": self.j, "t": self.t,
                "condition": self.condition, "value": self.value}


@dataclass
class SegmentCheckReport:
    """Per-node verdicts for the hypotheses along the segment [f-, f+]."""

    pass_mask: np.ndarray
    violations: list[NodeViolation] = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return len(self.violations) == 0


def _segment_density(gas, q1, q2, z, mask, t):
    """Density arrays on a segment state; errors carry (node, t)."""
    qsq = q1 * q1 + q2 * q2
    if gas.gamma == 1.0:
        arg = 0.5 * (gas.bernoulli - z * z - qsq)
        bad = (np.abs(arg) > EXP_CAP) & mask
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise GasOverflowError(
                f"isothermal exponent out of range at node ({i}, {j}), t={t}"
            )
        rho = gas.rho0 * np.exp(np.where(mask, arg, 0.0))
        return np.where(mask, rho, 0.0), np.ones_like(z)
    c2 = gas.c0_sq + 0.5 * (gas.gamma - 1.0) * (gas.bernoulli - z * z - qsq)
    bad = (c2 <= 0.0) & mask
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise VacuumError(
            f"vacuum on segment at node ({i}, {j}), t={t}: "
            f"c^2 = {c2[i, j]:.6g}", node=(int(i), int(j)), t=t,
        )
    base = np.where(mask & ~bad, c2, 1.0)
    return np.where(mask, base ** (1.0 / (gas.gamma - 1.0)), 0.0), c2


def check_segment_conditions(gas: GasModel, f_minus: ScalarField,
                             f_plus: ScalarField, n_t: int = 9,
                             n_xi: int = 64, seed: int = 0) -> SegmentCheckReport:
    """Sweep t in [0, 1] and verify the matrix hypotheses at every node.

    At each of n_t uniformly spaced t the convex combination
    phi_t = t f- + (1-t) f+ is checked for rho > 0, L^2 < 1 and z >= c
    (within roundoff slack), and the quadratic form is sampled at n_xi
    random unit vectors plus the six signed basis vectors.  The analytic
    hypotheses are the primary check; the xi sampling is a witness.
    Records the first violation per node.
    """
    grid = require_same_grid(f_minus, f_plus)
    if n_t < 2:
        raise ValueError("n_t must be >= 2")
    mask = grid.mask_array
    gm = spherical_gradient(f_minus)
    gp = spherical_gradient(f_plus)
    rng = np.random.default_rng(seed)
    basis = np.vstack([np.eye(3), -np.eye(3)])

    pass_mask = mask.copy()
    recorded = ~mask  # off-mask nodes never report
    violations: dict[tuple[int, int], NodeViolation] = {}

    def record(bad, t, condition, value_arr):
        nonlocal recorded
        fresh = bad & ~recorded
        for i, j in np.argwhere(fresh):
            violations[(int(i), int(j))] = NodeViolation(
                int(i), int(j), float(t), condition, float(value_arr[i, j]))
        recorded |= fresh
        pass_mask[fresh] = False

    for t in np.linspace(0.0, 1.0, n_t):
        q1 = t * gm.v_theta + (1.0 - t) * gp.v_theta
        q2 = t * gm.v_phi + (1.0 - t) * gp.v_phi
        z = t * f_minus.values + (1.0 - t) * f_plus.values
        qsq = q1 * q1 + q2 * q2
        if gas.gamma == 1.0:
            c2 = np.ones_like(z)
            rho_ok = np.abs(0.5 * (gas.bernoulli - z * z - qsq)) <= EXP_CAP
            rho = np.where(rho_ok & mask,
                           gas.rho0 * np.exp(np.where(rho_ok & mask,
                                                      0.5 * (gas.bernoulli - z * z - qsq),
                                                      0.0)),
                           0.0)
        else:
            c2 = gas.c0_sq + 0.5 * (gas.gamma - 1.0) * (gas.bernoulli - z * z - qsq)
            rho_ok = c2 > 0.0
            base = np.where(rho_ok & mask, c2, 1.0)
            rho = np.where(rho_ok & mask, base ** (1.0 / (gas.gamma - 1.0)), 0.0)
        record(mask & ~rho_ok, t, "rho_positive", c2)

        safe_c2 = np.where(rho_ok, c2, 1.0)
        l2 = np.where(rho_ok, qsq / safe_c2, np.inf)
        record(mask & rho_ok & (l2 >= 1.0), t, "mach_elliptic", l2)

        c = np.sqrt(np.maximum(safe_c2, 0.0))
        z_gap = z - c
        record(mask & rho_ok & (z_gap < -Z_GE_C_SLACK), t, "z_above_sound", z_gap)

        # Quadratic-form witness at nodes still clean for this t.
        live = mask & ~recorded
        if not np.any(live):
            continue
        idx = np.argwhere(live)
        n_live = idx.shape[0]
        xs = rng.normal(size=(n_live, n_xi, 3))
        xs /= np.linalg.norm(xs, axis=2, keepdims=True)
        xs = np.concatenate(
            [xs, np.broadcast_to(basis, (n_live, 6, 3)).copy()], axis=1)
        q1v = q1[live][:, None]
        q2v = q2[live][:, None]
        zv = z[live][:, None]
        c2v = safe_c2[live][:, None]
        scale = (rho[live] / safe_c2[live])[:, None]
        x1, x2, x3 = xs[:, :, 0], xs[:, :, 1], xs[:, :, 2]
        form = scale * (
            c2v * (x1 * x1 + x2 * x2)
            - (q1v * x1 + q2v * x2) ** 2
            + (zv * zv - c2v) * x3 * x3
        )
        tangential = (x1 * x1 + x2 * x2) > 0.0
        min_nonneg = np.min(form, axis=1)
        strict = np.where(tangential, form, np.inf).min(axis=1)
        bad_flat = (min_nonneg < -Z_GE_C_SLACK) | (strict <= 0.0)
        if np.any(bad_flat):
            bad = np.zeros_like(mask)
            value = np.zeros(mask.shape)
            worst = np.minimum(min_nonneg, strict)
            for k in np.argwhere(bad_flat).ravel():
                i, j = idx[k]
                bad[i, j] = True
                value[i, j] = worst[k]
            record(bad, t, "form_positive", value)

    out = sorted(violations.values(), key=lambda v: (v.i, v.j))
    return SegmentCheckReport(pass_mask=pass_mask, violations=out)


@dataclass
class EllipticityCertificate:
    """Attained uniform-ellipticity margins of a field over its mask."""

    eps: float
    eps_rho: float
    eps_L: float
    ratio_max: float | None
    passed: bool
    worst_node: dict
    violations: list = field(default_factory=list)

    def to_dict(self):
        return {
            "pass": self.passed,
            "eps": self.eps,
            "eps_rho": self.eps_rho,
            "eps_L": self.eps_L,
            "ratio_max": self.ratio_max,
            "worst_node": self.worst_node,
            "violations": self.violations,
        }


MAX_REPORTED_VIOLATIONS = 100


def certify_uniform_ellipticity(gas: GasModel, f: ScalarField,
                                eps: float) -> EllipticityCertificate:
    """Certify min rho >= eps and max L^2 <= 1 - eps over masked nodes.

    The certificate records the attained margins and, when the field is
    elliptic, the worst eigenvalue ratio 1/(1 - max L^2).  Vacuum nodes
    raise; non-elliptic states merely fail the certificate.
    """
    grid = f.grid
    mask = grid.mask_array
    rho, c2, q1, q2 = field_density(gas, f)
    qsq = q1 * q1 + q2 * q2
    l2 = np.where(mask, qsq / np.where(mask, c2, 1.0), 0.0)

    rho_masked = np.where(mask, rho, np.inf)
    l2_masked = np.where(mask, l2, -np.inf)
    eps_rho = float(np.min(rho_masked))
    max_l2 = float(np.max(l2_masked))
    eps_l = 1.0 - max_l2
    ratio = 1.0 / (1.0 - max_l2) if max_l2 < 1.0 else None
    passed = (eps_rho >= eps) and (eps_l >= eps)

    margin = np.where(mask, np.minimum(rho - eps, (1.0 - l2) - eps), np.inf)
    wi, wj = np.unravel_index(int(np.argmin(margin)), margin.shape)
    worst = {
        "i": int(wi), "j": int(wj),
        "theta": float(grid.thetas[wi]), "phi": float(grid.phis[wj]),
    }
    violations = []
    bad = mask & ((rho < eps) | (l2 > 1.0 - eps))
    for i, j in np.argwhere(bad)[:MAX_REPORTED_VIOLATIONS]:
        violations.append({
            "i": int(i), "j": int(j),
            "theta": float(grid.thetas[i]), "phi": float(grid.phis[j]),
            "rho": float(rho[i, j]), "l2": float(l2[i, j]),
        })
    return EllipticityCertificate(
        eps=eps, eps_rho=eps_rho, eps_L=eps_l, ratio_max=ratio,
        passed=passed, worst_node=worst, violations=violations,
    )
