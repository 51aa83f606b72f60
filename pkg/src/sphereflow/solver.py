"""Dirichlet boundary-value solver for the potential-flow equation.

Damped Newton iteration on the conservative discretization, so discrete
solutions inherit the divergence structure the comparison checks rely on.
The Jacobian is the analytically linearized operator (mean-value
coefficients collapsed at zero gap), applied matrix-free; inner systems go
through a Jacobi-preconditioned BiCGSTAB.  The line search halves the step
until the residual sup-norm decreases and the iterate stays admissible
(rho > 0 everywhere on the mask); vacuum is a hard wall.  If Newton cannot
make progress in the first iterations, a damped Picard (frozen-density)
step is tried instead.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .comparison import (
    CoefficientFields,
    linearized_diag,
    linearized_operator,
    mean_value_coefficients,
)
from .ellipticity import EllipticityCertificate, certify_uniform_ellipticity
from .errors import (
    BreakdownError,
    GridError,
    InadmissibleFieldError,
    LinearSolveError,
    MaxIterError,
    NonConvergenceError,
    VacuumEncounteredError,
    VacuumError,
)
from .gas import GasModel, GasOverflowError
from .grid import ScalarField, SphericalGrid
from .operators import field_density, flow_residual


@dataclass
class SolveOptions:
    newton_tol: float = 1e-10
    max_newton: int = 50
    max_damping: int = 30
    lin_tol: float = 1e-12
    lin_max_iter: int = 5000
    cert_eps: float = 1e-8

    def __post_init__(self):
        if self.newton_tol < 1e-14:
            raise ValueError("newton_tol must be >= 1e-14")
        for name in ("newton_tol", "max_newton", "max_damping", "lin_tol",
                     "lin_max_iter", "cert_eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_history: list
    final_certificate: EllipticityCertificate | None = None

    def to_dict(self):
        cert = self.final_certificate
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "residuals": [float(r) for r in self.residual_history],
            "certificate": cert.to_dict() if cert is not None else None,
        }


def _count_interior_components(grid: SphericalGrid) -> int:
    im = grid.interior_mask
    seen = np.zeros_like(im)
    nth, nph = grid.shape
    comps = 0
    for i0, j0 in np.argwhere(im):
        if seen[i0, j0]:
            continue
        comps += 1
        stack = [(int(i0), int(j0))]
        seen[i0, j0] = True
        while stack:
            i, j = stack.pop()
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if grid.phi_periodic:
                    jj %= nph
                if 0 <= ii < nth and 0 <= jj < nph and im[ii, jj] \
                        and not seen[ii, jj]:
                    seen[ii, jj] = True
                    stack.append((ii, jj))
    return comps


@dataclass
class BVProblem:
    """Dirichlet problem: flow operator = source on the masked interior."""

    gas: GasModel
    grid: SphericalGrid
    boundary: ScalarField
    source: ScalarField

    def __post_init__(self):
        if not self.grid.same_geometry(self.boundary.grid) \
                or not self.grid.same_geometry(self.source.grid):
            raise GridError("boundary/source fields do not live on the grid")
        bm = self.grid.boundary_mask
        if not bm.any():
            raise GridError("grid has no discrete boundary nodes")
        if not np.all(np.isfinite(self.boundary.values[bm])):
            raise GridError("boundary datum not finite on the boundary")
        if _count_interior_components(self.grid) > 1:
            warnings.warn("interior of the mask is disconnected",
                          stacklevel=2)


class _Breakdown(Exception):
    def __init__(self, best):
        super().__init__("Krylov recurrence breakdown")
        self.best = best


def _bicgstab_core(op, b, x0, minv, target, iter_cap):
    """One BiCGSTAB run; returns (x, iterations, converged_recursive)."""
    x = x0.copy()
    r = b - op(x)
    if np.linalg.norm(r) <= target:
        return x, 0, True
    if iter_cap <= 0:
        return x, 0, False
    rhat = r.copy()
    rho_old = 1.0
    alpha = 1.0
    omega = 1.0
    v = np.zeros_like(b)
    p = np.zeros_like(b)
    tiny = 1e-290
    for k in range(1, iter_cap + 1):
        rho = float(rhat @ r)
        if not np.isfinite(rho) or abs(rho) < tiny:
            raise _Breakdown(x)
        if k == 1:
            p = r.copy()
        else:
            if abs(omega) < tiny:
                raise _Breakdown(x)
            beta = (rho / rho_old) * (alpha / omega)
            p = r + beta * (p - omega * v)
        phat = minv * p
        v = op(phat)
        denom = float(rhat @ v)
        if not np.isfinite(denom) or abs(denom) < tiny:
            raise _Breakdown(x)
        alpha = rho / denom
        s = r - alpha * v
        if np.linalg.norm(s) <= target:
            return x + alpha * phat, k, True
        shat = minv * s
        t = op(shat)
        tt = float(t @ t)
        if not np.isfinite(tt) or tt < tiny:
            raise _Breakdown(x)
        omega = float(t @ s) / tt
        x = x + alpha * phat + omega * shat
        r = s - omega * t
        if np.linalg.norm(r) <= target:
            return x, k, True
        rho_old = rho
    return x, iter_cap, False


def linear_solve(op, rhs, tol, max_iter, diag=None):
    """Matrix-free Jacobi-preconditioned BiCGSTAB for op(x) = rhs.

    Runs to relative residual <= tol or MaxIterError.  Recursive-residual
    exits are re-verified against the true residual (warm restarts absorb
    drift).  A recurrence breakdown restarts once from a deterministically
    perturbed guess, then raises BreakdownError.  Deterministic for
    identical inputs.
    """
    b = np.asarray(rhs, dtype=float).ravel()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b)
    if diag is None:
        minv = np.ones_like(b)
    else:
        dg = np.abs(np.asarray(diag, dtype=float).ravel())
        top = float(np.max(dg)) if dg.size else 0.0
        floor = 1e-14 * top if top > 0.0 else 1.0
        minv = 1.0 / np.maximum(dg, floor)
    target = tol * bnorm

    def run(x_start):
        x = x_start
        used = 0
        while True:
            x, it, _ = _bicgstab_core(op, b, x, minv, target, max_iter - used)
            used += it
            res = float(np.linalg.norm(b - op(x)))
            if res <= target * (1.0 + 1e-9):
                return x
            if used >= max_iter:
                raise MaxIterError(
                    f"linear solve: {used} iterations, residual {res:.3e} "
                    f"above target {target:.3e}",
                    best=x, residual=res, iterations=used,
                )

    try:
        return run(np.zeros_like(b))
    except _Breakdown as first:
        perturbed = first.best + (1e-8 * bnorm) * np.cos(
            np.arange(b.size, dtype=float))
        try:
            return run(perturbed)
        except _Breakdown as second:
            raise BreakdownError(
                "Krylov recurrence broke down twice (original and perturbed "
                "restart)", best=second.best,
            ) from None


def _interior_index(grid: SphericalGrid):
    return np.flatnonzero(grid.interior_mask.ravel())


def _linear_dirichlet(apply_full, diag_full, grid, boundary_vals, rhs_full,
                      tol, max_iter):
    """Solve the linear operator = rhs on interior nodes, datum elsewhere."""
    idx = _interior_index(grid)
    base = np.where(grid.interior_mask, 0.0, boundary_vals)
    rhs_int = (rhs_full - apply_full(base)).ravel()[idx]

    def matvec(x):
        full = np.zeros(grid.shape).ravel()
        full[idx] = x
        return apply_full(full.reshape(grid.shape)).ravel()[idx]

    w = linear_solve(matvec, rhs_int, tol, max_iter,
                     diag=diag_full.ravel()[idx])
    out = base.ravel().copy()
    out[idx] = w
    return out.reshape(grid.shape)


def _admissible(gas, f):
    try:
        field_density(gas, f)
        return True, None
    except (VacuumError, GasOverflowError) as err:
        return False, getattr(err, "node", None)


def _frozen_density_coefficients(gas, f):
    rho = field_density(gas, f)[0]
    grid = f.grid
    zero = np.zeros(grid.shape)
    return CoefficientFields(
        grid, a11=rho.copy(), a12=zero.copy(), a21=zero.copy(),
        a22=rho.copy(), b1=zero.copy(), b2=zero.copy(), c1=zero.copy(),
        c2=zero.copy(), d=2.0 * rho,
    )


def _line_search(grid, phi, delta, idx, res, interior_residual, max_damping):
    lam = 1.0
    all_vacuum = True
    for _ in range(max_damping + 1):
        vals = phi.values.ravel().copy()
        vals[idx] += lam * delta
        cand = ScalarField(grid, vals.reshape(grid.shape))
        try:
            r_new = interior_residual(cand)
        except (VacuumError, GasOverflowError):
            lam *= 0.5
            continue
        all_vacuum = False
        res_new = float(np.max(np.abs(r_new)))
        if np.isfinite(res_new) and res_new < res:
            return cand, r_new, res_new, all_vacuum
        lam *= 0.5
    return None, None, None, all_vacuum


def solve_dirichlet(problem: BVProblem, opts: SolveOptions | None = None):
    """Solve the Dirichlet problem; returns (field, SolveReport).

    The initial guess is the harmonic (Laplace-Beltrami) extension of the
    boundary datum.  Boundary nodes carry the datum bit-exactly.  The
    returned report embeds an ellipticity certificate of the solution.
    """
    if opts is None:
        opts = SolveOptions()
    gas, grid = problem.gas, problem.grid
    idx = _interior_index(grid)
    if idx.size == 0:
        raise GridError("no interior nodes to solve for")
    source_int = problem.source.values.ravel()[idx]

    lb = CoefficientFields.isotropic(grid, a=1.0, d=0.0)
    guess_vals = _linear_dirichlet(
        linearized_operator(lb, interior_only=True), linearized_diag(lb),
        grid, problem.boundary.values, np.zeros(grid.shape),
        opts.lin_tol, opts.lin_max_iter,
    )
    phi = ScalarField(grid, guess_vals)
    ok, node = _admissible(gas, phi)
    if not ok:
        raise VacuumEncounteredError(
            f"initial iterate already inadmissible at node {node}", node=node)

    def interior_residual(f):
        return flow_residual(gas, f).values.ravel()[idx] - source_int

    r = interior_residual(phi)
    res = float(np.max(np.abs(r)))
    history = [res]
    iterations = 0
    picard_left = 3

    while res > opts.newton_tol:
        if iterations >= opts.max_newton:
            report = SolveReport(False, iterations, history)
            raise NonConvergenceError(
                f"Newton cap {opts.max_newton} reached, residual {res:.3e}",
                field=phi, report=report,
            )
        coeffs = mean_value_coefficients(gas, phi, phi, n_quad=1)
        jac = linearized_operator(coeffs, interior_only=True)
        jdiag = linearized_diag(coeffs).ravel()[idx]

        def matvec(x):
            full = np.zeros(grid.shape).ravel()
            full[idx] = x
            return jac(full.reshape(grid.shape)).ravel()[idx]

        try:
            delta = linear_solve(matvec, -r, opts.lin_tol,
                                 opts.lin_max_iter, diag=jdiag)
        except LinearSolveError as err:
            if err.best is None:
                report = SolveReport(False, iterations, history)
                raise NonConvergenceError(
                    "inner linear solve failed with no usable direction",
                    field=phi, report=report,
                ) from err
            delta = err.best  # inexact direction; the line search decides

        cand, r_new, res_new, all_vacuum = _line_search(
            grid, phi, delta, idx, res, interior_residual, opts.max_damping)

        if cand is None and picard_left > 0 and iterations < 3:
            # frozen-density fallback: solve the linear problem with rho
            # held at the current iterate and step toward its solution
            picard_left -= 1
            pc = _frozen_density_coefficients(gas, phi)
            picard_vals = _linear_dirichlet(
                linearized_operator(pc, interior_only=True),
                linearized_diag(pc), grid, problem.boundary.values,
                problem.source.values, opts.lin_tol, opts.lin_max_iter,
            )
            delta = (picard_vals - phi.values).ravel()[idx]
            cand, r_new, res_new, av2 = _line_search(
                grid, phi, delta, idx, res, interior_residual,
                opts.max_damping)
            all_vacuum = all_vacuum and av2

        if cand is None:
            if all_vacuum:
                raise VacuumEncounteredError(
                    "damping exhausted without an admissible iterate")
            report = SolveReport(False, iterations, history)
            raise NonConvergenceError(
                f"line search stalled at residual {res:.3e}",
                field=phi, report=report,
            )
        phi, r, res = cand, r_new, res_new
        history.append(res)
        iterations += 1

    cert = certify_uniform_ellipticity(gas, phi, opts.cert_eps)
    return phi, SolveReport(True, iterations, history, cert)


def manufactured_problem(gas: GasModel, grid: SphericalGrid,
                         f_exact: ScalarField) -> BVProblem:
    """Build the problem whose exact discrete solution is f_exact.

    The source is the discrete flow residual of f_exact (same stencil the
    solver zeroes) and the boundary datum is its trace, so solving the
    problem on the same grid must reproduce f_exact to solver tolerance.
    """
    if not grid.same_geometry(f_exact.grid):
        raise GridError("f_exact does not live on the given grid")
    try:
        _, c2, q1, q2 = field_density(gas, f_exact)
    except (VacuumError, GasOverflowError) as err:
        raise InadmissibleFieldError(
            f"exact field is inadmissible: {err}") from err
    m = grid.mask_array
    l2 = (q1 * q1 + q2 * q2) / np.where(m, c2, 1.0)
    if np.any(m & (l2 >= 1.0)):
        i, j = np.argwhere(m & (l2 >= 1.0))[0]
        raise InadmissibleFieldError(
            f"exact field is not elliptic at node ({i}, {j}): "
            f"L^2 = {l2[i, j]:.4g}"
        )
    source = flow_residual(gas, f_exact)
    return BVProblem(gas=gas, grid=grid, boundary=f_exact.copy(),
                     source=source)
