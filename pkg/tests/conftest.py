import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import PAIR_SCENARIOS, SMALL_PATCH

import sphereflow as sf


@dataclass
class PairScenario:
    """One solver-built sub/supersolution pair plus its margin-0 twin."""

    gamma: float
    gas: sf.GasModel
    grid: sf.SphericalGrid
    f_plus: sf.ScalarField      # N f = 0, boundary g
    f_minus: sf.ScalarField     # N f = s > 0, boundary g - margin
    f_minus_touch: sf.ScalarField  # N f = s > 0, boundary g (touching twin)
    margin: float
    source: float
    report: sf.ComparisonReport


@pytest.fixture(scope="session")
def pair_suite():
    """20 randomized solver-built pairs over gamma in {-1, 1, 1.4, 2}.

    Boundary data are random smooth perturbations of a per-gas admissible
    level, the subsolution source is a random positive constant, and the
    boundary margin is >= 0.01.  The same suite feeds the weak-comparison,
    weak-form-sign, Hopf and dichotomy acceptance criteria.
    """
    rng = np.random.default_rng(20240817)
    grid = sf.SphericalGrid(*SMALL_PATCH, 33, 33)
    zero = sf.ScalarField.constant(grid, 0.0)
    scenarios = []
    gammas = [-1.0, 1.0, 1.4, 2.0] * 5
    for gamma in gammas:
        data = PAIR_SCENARIOS[gamma]
        gas = sf.GasModel(gamma=gamma, rho0=1.0, bernoulli=data["bernoulli"])
        a1, a2 = rng.uniform(-0.04, 0.04, size=2)
        phase = rng.uniform(0.0, np.pi)
        margin = float(rng.uniform(0.01, 0.05))
        source = float(rng.uniform(0.02, 0.08))
        level = data["level"]
        bnd = sf.ScalarField.from_function(
            grid,
            lambda th, ph: level + a1 * np.cos(th)
            + a2 * np.sin(th) * np.sin(ph + phase),
        )
        bnd_low = sf.ScalarField(grid, bnd.values - margin)
        src = sf.ScalarField.constant(grid, source)
        f_plus, _ = sf.solve_dirichlet(
            sf.BVProblem(gas=gas, grid=grid, boundary=bnd, source=zero))
        f_minus, _ = sf.solve_dirichlet(
            sf.BVProblem(gas=gas, grid=grid, boundary=bnd_low, source=src))
        f_touch, _ = sf.solve_dirichlet(
            sf.BVProblem(gas=gas, grid=grid, boundary=bnd, source=src))
        report = sf.verify_weak_comparison(gas, f_minus, f_plus)
        scenarios.append(PairScenario(
            gamma=gamma, gas=gas, grid=grid, f_plus=f_plus, f_minus=f_minus,
            f_minus_touch=f_touch, margin=margin, source=source,
            report=report,
        ))
    return scenarios


@pytest.fixture()
def wide_grid_33():
    from helpers import WIDE_PATCH
    return sf.SphericalGrid(*WIDE_PATCH, 33, 33)


@pytest.fixture()
def gas_b4():
    return sf.GasModel(gamma=2.0, rho0=1.0, bernoulli=4.0)
