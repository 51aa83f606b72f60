import numpy as np
import pytest

import sphereflow as sf
from sphereflow.errors import GridError


def test_grid_node_layout():
    g = sf.SphericalGrid(np.pi / 3, 2 * np.pi / 3, 0.0, np.pi / 2, 5, 9)
    assert g.thetas[0] == pytest.approx(np.pi / 3)
    assert g.thetas[-1] == pytest.approx(2 * np.pi / 3)
    assert g.phis[-1] == pytest.approx(np.pi / 2)
    assert g.h_theta == pytest.approx((np.pi / 3) / 4)


def test_grid_validation():
    with pytest.raises(GridError):
        sf.SphericalGrid(0.0, 1.0, 0.0, 1.0, 5, 5)  # includes the pole
    with pytest.raises(GridError):
        sf.SphericalGrid(1e-4, 1.0, 0.0, 1.0, 5, 5)  # under the sin floor
    with pytest.raises(GridError):
        sf.SphericalGrid(1.0, 2.0, 0.0, 1.0, 2, 5)  # too small
    with pytest.raises(GridError):
        sf.SphericalGrid(1.0, 2.0, 0.0, 1.0, 5, 5, phi_periodic=True)


def test_periodic_grid_drops_duplicate_node():
    g = sf.SphericalGrid(1.0, 2.0, 0.0, 2 * np.pi, 5, 8, phi_periodic=True)
    assert g.h_phi == pytest.approx(2 * np.pi / 8)
    assert g.phis[-1] < 2 * np.pi


def test_boundary_and_interior_full_patch():
    g = sf.SphericalGrid(1.0, 2.0, 0.0, 1.0, 5, 4)
    b = g.boundary_mask
    assert b[0].all() and b[-1].all() and b[:, 0].all() and b[:, -1].all()
    assert not b[1:-1, 1:-1].any()
    assert np.array_equal(g.interior_mask, ~b & g.mask_array)


def test_boundary_with_mask_hole():
    mask = np.ones((7, 7), dtype=bool)
    mask[3, 3] = False
    g = sf.SphericalGrid(1.0, 2.0, 0.0, 1.0, 7, 7, mask=mask)
    b = g.boundary_mask
    # neighbors of the hole become boundary nodes
    assert b[2, 3] and b[4, 3] and b[3, 2] and b[3, 4]
    assert not g.interior_mask[3, 3]


def test_field_shape_check():
    g = sf.SphericalGrid(1.0, 2.0, 0.0, 1.0, 5, 4)
    with pytest.raises(GridError):
        sf.ScalarField(g, np.zeros((4, 5)))
    f = sf.ScalarField.constant(g, 2.5)
    assert f.values.shape == (5, 4)
    assert np.all(f.values == 2.5)
