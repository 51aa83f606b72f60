"""File formats: ScalarField CSV, type/L^2 maps, masks, PGM and JSON reports.

ScalarField CSV carries a `theta,phi,value` header and one node per row in
theta-outer row-major order, printed with 17 significant digits so values
round-trip bit-identically.  Grid geometry lives in the scenario config,
not in the CSV.
"""

import json
import math

import numpy as np

from .errors import ConfigError, GridError
from .grid import ScalarField, SphericalGrid


def write_field_csv(path, f: ScalarField):
    grid = f.grid
    lines = ["theta,phi,value"]
    for i in range(grid.n_theta):
        th = grid.thetas[i]
        for j in range(grid.n_phi):
            lines.append(
                f"{th:.17g},{grid.phis[j]:.17g},{f.values[i, j]:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field_csv(path, grid: SphericalGrid) -> ScalarField:
    """Read a field written by write_field_csv onto a matching grid."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "theta,phi,value":
            raise GridError(f"{path}: expected header 'theta,phi,value', "
                            f"got {header!r}")
        rows = [line.strip() for line in fh if line.strip()]
    expected = grid.n_theta * grid.n_phi
    if len(rows) != expected:
        raise GridError(f"{path}: {len(rows)} data rows, expected {expected}")
    values = np.empty(grid.shape)
    k = 0
    for i in range(grid.n_theta):
        for j in range(grid.n_phi):
            parts = rows[k].split(",")
            if len(parts) != 3:
                raise GridError(f"{path}: bad row {k + 2}: {rows[k]!r}")
            th, ph, val = (float(p) for p in parts)
            if abs(th - grid.thetas[i]) > 1e-9 or abs(ph - grid.phis[j]) > 1e-9:
                raise GridError(
                    f"{path}: row {k + 2} coordinates ({th}, {ph}) do not "
                    f"match grid node ({grid.thetas[i]}, {grid.phis[j]})")
            values[i, j] = val
            k += 1
    return ScalarField(grid, values)


def write_type_map_csv(path, grid: SphericalGrid, letters: np.ndarray):
    lines = ["i,j,theta,phi,type"]
    for i in range(grid.n_theta):
        for j in range(grid.n_phi):
            lines.append(f"{i},{j},{grid.thetas[i]:.17g},"
                         f"{grid.phis[j]:.17g},{letters[i, j]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_l2_csv(path, grid: SphericalGrid, l2: np.ndarray):
    lines = ["i,j,theta,phi,l2"]
    for i in range(grid.n_theta):
        for j in range(grid.n_phi):
            v = l2[i, j]
            text = "nan" if not math.isfinite(v) else f"{v:.17g}"
            lines.append(f"{i},{j},{grid.thetas[i]:.17g},"
                         f"{grid.phis[j]:.17g},{text}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_pgm(path, values: np.ndarray):
    """8-bit ASCII PGM of a scalar map, linearly scaled over finite values."""
    arr = np.asarray(values, dtype=float)
    finite = np.isfinite(arr)
    if finite.any():
        lo = float(arr[finite].min())
        hi = float(arr[finite].max())
        span = hi - lo if hi > lo else 1.0
        gray = np.zeros(arr.shape, dtype=int)
        gray[finite] = np.clip(
            np.round(255.0 * (arr[finite] - lo) / span), 0, 255).astype(int)
    else:
        gray = np.zeros(arr.shape, dtype=int)
    rows, cols = arr.shape
    lines = [f"P2", f"{cols} {rows}", "255"]
    for i in range(rows):
        lines.append(" ".join(str(g) for g in gray[i]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mask_csv(path, n_theta: int, n_phi: int) -> np.ndarray:
    """Mask file: n_theta lines of n_phi comma-separated 0/1 entries."""
    with open(path) as fh:
        rows = [line.strip() for line in fh if line.strip()]
    if len(rows) != n_theta:
        raise ConfigError(f"{path}: {len(rows)} mask rows, expected {n_theta}",
                          key="grid.mask")
    mask = np.zeros((n_theta, n_phi), dtype=bool)
    for i, row in enumerate(rows):
        parts = row.split(",")
        if len(parts) != n_phi:
            raise ConfigError(
                f"{path}: mask row {i + 1} has {len(parts)} entries, "
                f"expected {n_phi}", key="grid.mask")
        mask[i] = [p.strip() not in ("0", "") for p in parts]
    return mask


def _sanitize(obj):
    """Replace non-finite floats with None so reports stay strict JSON."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json_report(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(_sanitize(payload), fh, indent=2, allow_nan=False)
        fh.write("\n")
