"""Rectangular (theta, phi) patches on the unit sphere and node-indexed fields.

Grids are uniform tensor products excluding neighborhoods of the poles
(1/sin(theta) blowup is a coordinate artifact, and the conical-flow
applications live away from the axis).  An optional boolean mask selects
the closed working set Omega-bar; its discrete boundary consists of masked
nodes adjacent to unmasked ones plus masked nodes on the patch edge.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import GridError, GridMismatchError

DEFAULT_SIN_FLOOR = 1e-3


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    theta_min: float
    theta_max: float
    phi_min: float
    phi_max: float
    n_theta: int
    n_phi: int
    mask: np.ndarray | None = None
    phi_periodic: bool = False
    sin_floor: float = DEFAULT_SIN_FLOOR

    def __post_init__(self):
        if not (0.0 < self.theta_min < self.theta_max < np.pi):
            raise GridError(
                f"need 0 < theta_min < theta_max < pi, got "
                f"[{self.theta_min}, {self.theta_max}]"
            )
        if not self.phi_min < self.phi_max:
            raise GridError("need phi_min < phi_max")
        if self.n_theta < 3 or self.n_phi < 3:
            raise GridError(
                f"grid too small: {self.n_theta} x {self.n_phi} (need >= 3 nodes "
                "per direction)"
            )
        lo = min(np.sin(self.theta_min), np.sin(self.theta_max))
        if lo < self.sin_floor:
            raise GridError(
                f"pole proximity: min sin(theta) = {lo:.3e} < floor "
                f"{self.sin_floor:.3e}"
            )
        if self.phi_periodic:
            span = self.phi_max - self.phi_min
            if abs(span - 2.0 * np.pi) > 1e-10:
                raise GridError(
                    "phi_periodic requires phi_max - phi_min = 2*pi"
                )
        if self.mask is not None:
            m = np.asarray(self.mask, dtype=bool)
            if m.shape != (self.n_theta, self.n_phi):
                raise GridError(
                    f"mask shape {m.shape} != grid shape "
                    f"({self.n_theta}, {self.n_phi})"
                )
            if not m.any():
                raise GridError("mask selects no nodes")
            object.__setattr__(self, "mask", m.copy())

    @property
    def shape(self):
        return (self.n_theta, self.n_phi)

    @cached_property
    def h_theta(self):
        return (self.theta_max - self.theta_min) / (self.n_theta - 1)

    @cached_property
    def h_phi(self):
        # Periodic grids drop the duplicate phi_max node.
        if self.phi_periodic:
            return (self.phi_max - self.phi_min) / self.n_phi
        return (self.phi_max - self.phi_min) / (self.n_phi - 1)

    @cached_property
    def thetas(self):
        return self.theta_min + self.h_theta * np.arange(self.n_theta)

    @cached_property
    def phis(self):
        return self.phi_min + self.h_phi * np.arange(self.n_phi)

    @cached_property
    def sin_theta(self):
        return np.sin(self.thetas)

    @cached_property
    def theta_mesh(self):
        return np.broadcast_to(self.thetas[:, None], self.shape).copy()

    @cached_property
    def phi_mesh(self):
        return np.broadcast_to(self.phis[None, :], self.shape).copy()

    @cached_property
    def mask_array(self):
        """Effective mask: all nodes when no explicit mask was given."""
        if self.mask is None:
            return np.ones(self.shape, dtype=bool)
        return self.mask

    @cached_property
    def boundary_mask(self):
        """Masked nodes on the patch edge or touching an unmasked node."""
        m = self.mask_array
        pad = np.zeros((self.n_theta + 2, self.n_phi + 2), dtype=bool)
        pad[1:-1, 1:-1] = m
        if self.phi_periodic:
            pad[1:-1, 0] = m[:, -1]
            pad[1:-1, -1] = m[:, 0]
        surrounded = (
            pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
        )
        return m & ~surrounded

    @cached_property
    def interior_mask(self):
        return self.mask_array & ~self.boundary_mask

    def same_geometry(self, other: "SphericalGrid") -> bool:
        if self is other:
            return True
        return (
            self.theta_min == other.theta_min
            and self.theta_max == other.theta_max
            and self.phi_min == other.phi_min
            and self.phi_max == other.phi_max
            and self.n_theta == other.n_theta
            and self.n_phi == other.n_phi
            and self.phi_periodic == other.phi_periodic
            and np.array_equal(self.mask_array, other.mask_array)
        )


def require_same_grid(*fields):
    g0 = fields[0].grid
    for f in fields[1:]:
        if not g0.same_geometry(f.grid):
            raise GridMismatchError("fields do not share a grid")
    return g0


@dataclass(eq=False)
class ScalarField:
    """One real value per grid node, theta index outer."""

    grid: SphericalGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise GridError(
                f"field shape {v.shape} != grid shape {self.grid.shape}"
            )
        self.values = v

    @classmethod
    def constant(cls, grid, value):
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid, fn):
        """Sample fn(theta, phi) at every node (numpy-broadcastable fn)."""
        return cls(grid, np.asarray(fn(grid.theta_mesh, grid.phi_mesh), dtype=float))

    def copy(self):
        return ScalarField(self.grid, self.values.copy())


@dataclass(eq=False)
class VectorField:
    """Per-node pair (v_theta, v_phi) in the orthonormal spherical frame."""

    grid: SphericalGrid
    v_theta: np.ndarray
    v_phi: np.ndarray

    def __post_init__(self):
        vt = np.asarray(self.v_theta, dtype=float)
        vp = np.asarray(self.v_phi, dtype=float)
        if vt.shape != self.grid.shape or vp.shape != self.grid.shape:
            raise GridError("vector component shape does not match grid")
        self.v_theta = vt
        self.v_phi = vp
