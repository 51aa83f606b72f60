"""Equation of state and pointwise thermodynamic algebra.

The gas satisfies p'(rho) = rho^(gamma-1) with gamma >= -1, which covers
polytropic gases (gamma > 1), the isothermal gas (gamma = 1, where the
sound speed is identically 1) and the Chaplygin gas (gamma = -1).  A flow
state on the unit sphere is the triple (q1, q2, z): the two tangential
velocity components and the radial component z.  Everything here is a pure
function of the state; array-valued states broadcast elementwise.
"""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import GasOverflowError, VacuumError

# |exponent| bound for the isothermal density exp(); keeps exp() inside
# double-precision range.
EXP_CAP = 700.0

DEFAULT_EPS_TYPE = 1e-8


@dataclass(frozen=True)
class GasModel:
    """Gas law parameters: ratio gamma, reference density and Bernoulli constant.

    The squared sound speed at the reference density, ``c0_sq``, is always
    derived as rho0^(gamma-1) (exactly 1 for gamma = 1); storing it freely
    would let density() and sound_speed_sq() disagree.
    """

    gamma: float
    rho0: float = 1.0
    bernoulli: float = 0.0
    c0_sq: float = field(init=False)

    def __post_init__(self):
        if self.gamma < -1.0:
            raise ValueError(f"gamma must be >= -1, got {self.gamma}")
        if self.rho0 <= 0.0:
            raise ValueError(f"rho0 must be > 0, got {self.rho0}")
        if self.gamma == 1.0:
            c0 = 1.0
        else:
            c0 = self.rho0 ** (self.gamma - 1.0)
        object.__setattr__(self, "c0_sq", float(c0))


@dataclass(frozen=True)
class FlowState:
    """Pointwise (or elementwise array) velocity triple (q1, q2, z)."""

    q1: float
    q2: float
    z: float

    def speed_sq(self):
        """Tangential speed squared |q|^2."""
        return self.q1 * self.q1 + self.q2 * self.q2


class FlowType(IntEnum):
    ELLIPTIC = 0
    PARABOLIC = 1
    HYPERBOLIC = 2
    VACUUM = 3

    @property
    def letter(self):
        return "EPHV"[int(self)]


def sound_speed_sq(gas: GasModel, s: FlowState):
    """Squared sound speed c^2 = c0^2 + (gamma-1)/2 (B - z^2 - |q|^2).

    For gamma = 1 this is identically 1 (c^2 = rho^0).  May return
    nonpositive values; callers decide whether that is vacuum.
    """
    if gas.gamma == 1.0:
        return np.ones_like(np.asarray(s.z, dtype=float)) if np.ndim(s.z) else 1.0
    return gas.c0_sq + 0.5 * (gas.gamma - 1.0) * (
        gas.bernoulli - s.z * s.z - s.speed_sq()
    )


def _isothermal_exponent(gas: GasModel, s: FlowState):
    return 0.5 * (gas.bernoulli - s.z * s.z - s.speed_sq())


def density(gas: GasModel, s: FlowState):
    """Density from the Bernoulli relation.

    gamma != 1: rho = (c^2)^(1/(gamma-1)); raises VacuumError if c^2 <= 0.
    gamma  = 1: rho = rho0 * exp((B - z^2 - |q|^2)/2), the pointwise limit
    of the power law; raises GasOverflowError past the exp() guard.
    """
    if gas.gamma == 1.0:
        arg = _isothermal_exponent(gas, s)
        if np.any(np.abs(arg) > EXP_CAP):
            raise GasOverflowError(
                f"isothermal density exponent exceeds +/-{EXP_CAP:g}"
            )
        return gas.rho0 * np.exp(arg)
    c2 = sound_speed_sq(gas, s)
    if np.any(c2 <= 0.0):
        raise VacuumError(f"vacuum state: c^2 = {np.min(c2):.6g} <= 0")
    return c2 ** (1.0 / (gas.gamma - 1.0))


def density_partials(gas: GasModel, s: FlowState):
    """(d rho/d q1, d rho/d q2, d rho/d z) at the state.

    Each partial is -x / rho^(gamma-2); rho^(gamma-2) is evaluated as
    c^2/rho, which is exact under c^2 = rho^(gamma-1) and also covers
    gamma = 1 (where the partials are -x * rho).
    """
    rho = density(gas, s)
    c2 = sound_speed_sq(gas, s)
    scale = rho / c2
    return (-s.q1 * scale, -s.q2 * scale, -s.z * scale)


def pseudo_mach_sq(gas: GasModel, s: FlowState):
    """Tangential pseudo-Mach number squared, L^2 = |q|^2 / c^2."""
    c2 = sound_speed_sq(gas, s)
    if np.any(c2 <= 0.0):
        raise VacuumError(f"vacuum state: c^2 = {np.min(c2):.6g} <= 0")
    return s.speed_sq() / c2


def classify_codes(gas: GasModel, s: FlowState, eps_type: float = DEFAULT_EPS_TYPE):
    """Vectorized type classification; returns FlowType integer codes.

    Vacuum is a classification here, not an error: it marks nodes where
    c^2 <= 0 or (gamma = 1) the density exponent is out of range.
    """
    if eps_type <= 0.0:
        raise ValueError("eps_type must be > 0")
    q_sq = np.asarray(s.speed_sq(), dtype=float)
    codes = np.full(q_sq.shape, int(FlowType.VACUUM), dtype=np.int8)
    if gas.gamma == 1.0:
        c2 = np.ones_like(q_sq)
        ok = np.abs(_isothermal_exponent(gas, s)) <= EXP_CAP
    else:
        c2 = np.asarray(sound_speed_sq(gas, s), dtype=float)
        ok = c2 > 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        l2 = np.where(ok, q_sq / np.where(ok, c2, 1.0), np.inf)
    codes[ok & (np.abs(l2 - 1.0) <= eps_type)] = int(FlowType.PARABOLIC)
    codes[ok & (l2 > 1.0 + eps_type)] = int(FlowType.HYPERBOLIC)
    codes[ok & (l2 < 1.0 - eps_type)] = int(FlowType.ELLIPTIC)
    return codes


def classify_state(gas: GasModel, s: FlowState, eps_type: float = DEFAULT_EPS_TYPE):
    """Classify a single state as Elliptic/Parabolic/Hyperbolic/Vacuum.

    A band of half-width eps_type around L^2 = 1 counts as parabolic; it
    exists only to absorb roundoff (analytically the parabolic set has
    measure zero).
    """
    codes = np.asarray(classify_codes(gas, s, eps_type))
    if codes.size != 1:
        raise ValueError("classify_state expects a pointwise state; "
                         "use classify_codes for array states")
    return FlowType(int(codes.reshape(-1)[0]))


def speed_sq_excess(gas: GasModel, s: FlowState):
    """Full squared speed minus squared sound speed: |q|^2 + z^2 - c^2.

    This is the quantity whose segment convexity transfers ellipticity
    from the endpoints of [phi-, phi+] to the whole segment; its Hessian
    in (q1, q2, z) is the constant matrix returned by convexity_hessian.
    """
    return s.speed_sq() + s.z * s.z - sound_speed_sq(gas, s)


def convexity_hessian(gas: GasModel):
    """Constant Hessian of speed_sq_excess: (gamma+1) * I (3x3).

    Nonnegative for every admissible gamma >= -1, and exactly zero for the
    Chaplygin gas gamma = -1.
    """
    return (gas.gamma + 1.0) * np.eye(3)
