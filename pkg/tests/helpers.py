"""Shared test utilities: random admissible states and finite-difference
oracles kept independent of the library code paths they check."""

import numpy as np

from sphereflow import FlowState, GasModel, density, sound_speed_sq

# Per-gas scenario data for solver-built comparison pairs.  Boundary levels
# sit inside the corridor where z >= c holds and the homogeneous solution
# stays subsonic on the test patch.
PAIR_SCENARIOS = {
    2.0: dict(bernoulli=4.0, level=1.55),
    1.4: dict(bernoulli=4.0, level=1.40),
    1.0: dict(bernoulli=4.0, level=1.25),
    -1.0: dict(bernoulli=2.0, level=1.50),
}

SMALL_PATCH = (np.pi / 3, np.pi / 2, 0.0, np.pi / 4)
WIDE_PATCH = (np.pi / 3, 2 * np.pi / 3, 0.0, np.pi / 2)


def random_gas(rng, gamma):
    return GasModel(gamma=gamma, rho0=rng.uniform(0.5, 2.0),
                    bernoulli=rng.uniform(1.0, 5.0))


def random_gas_with_supersonic_radial(rng, gamma):
    """Random gas whose z >= c set is nonempty (Chaplygin needs B > c0^2)."""
    rho0 = rng.uniform(0.5, 2.0)
    c0_sq = 1.0 if gamma == 1.0 else rho0 ** (gamma - 1.0)
    lo = c0_sq + 0.5 if gamma < 1.0 else 1.0
    return GasModel(gamma=gamma, rho0=rho0,
                    bernoulli=rng.uniform(lo, lo + 4.0))


def random_admissible_state(rng, gas, elliptic=False, max_l2=0.98,
                            z_above_c=False, c2_floor=0.05):
    """Rejection-sample a state with rho > 0 (optionally elliptic, z >= c).

    Keeps c^2 above a floor so density partials stay O(1); near-vacuum
    states blow the scale up and are not what the tolerance checks target.
    """
    for _ in range(20000):
        z = rng.uniform(0.05, 3.0)
        speed = rng.uniform(0.0, 1.5)
        ang = rng.uniform(0.0, 2.0 * np.pi)
        s = FlowState(speed * np.cos(ang), speed * np.sin(ang), z)
        c2 = sound_speed_sq(gas, s)
        if c2 <= c2_floor:
            continue
        if elliptic and s.speed_sq() > max_l2 * c2:
            continue
        if z_above_c and z < np.sqrt(c2):
            continue
        return s
    raise RuntimeError("state sampling failed")


def fd_density_partials(gas, s, h=1e-6):
    """Central finite differences of density() in each state component."""
    out = []
    for k in range(3):
        dq = [0.0, 0.0, 0.0]
        dq[k] = h
        sp = FlowState(s.q1 + dq[0], s.q2 + dq[1], s.z + dq[2])
        sm = FlowState(s.q1 - dq[0], s.q2 - dq[1], s.z - dq[2])
        out.append((density(gas, sp) - density(gas, sm)) / (2.0 * h))
    return tuple(out)


def fd_hessian(fn, x0, h=1e-4):
    """Central finite-difference Hessian of a scalar function on R^3."""
    x0 = np.asarray(x0, dtype=float)
    H = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            xpp = x0.copy(); xpp[i] += h; xpp[j] += h
            xpm = x0.copy(); xpm[i] += h; xpm[j] -= h
            xmp = x0.copy(); xmp[i] -= h; xmp[j] += h
            xmm = x0.copy(); xmm[i] -= h; xmm[j] -= h
            H[i, j] = (fn(xpp) - fn(xpm) - fn(xmp) + fn(xmm)) / (4.0 * h * h)
    return H


def observed_orders(errors):
    """log2 ratios of successive errors from a dyadic refinement."""
    return [float(np.log2(errors[k] / errors[k + 1]))
            for k in range(len(errors) - 1)]
