import numpy as np
import pytest

from helpers import WIDE_PATCH

import sphereflow as sf
from sphereflow import ScalarField, SphericalGrid
from sphereflow.fieldio import (
    read_field_csv,
    read_mask_csv,
    write_field_csv,
    write_json_report,
    write_pgm,
)


def test_field_csv_round_trip(tmp_path):
    g = SphericalGrid(*WIDE_PATCH, 17, 13)
    rng = np.random.default_rng(9)
    f = ScalarField(g, rng.normal(size=g.shape) * 1e3)
    path = tmp_path / "field.csv"
    write_field_csv(path, f)
    back = read_field_csv(path, g)
    # 17 significant digits round-trip doubles bit-identically
    assert np.array_equal(back.values, f.values)


def test_field_csv_rejects_wrong_grid(tmp_path):
    g = SphericalGrid(*WIDE_PATCH, 9, 9)
    other = SphericalGrid(*WIDE_PATCH, 11, 9)
    path = tmp_path / "field.csv"
    write_field_csv(path, ScalarField.constant(g, 1.0))
    with pytest.raises(sf.GridError):
        read_field_csv(path, other)


def test_mask_csv(tmp_path):
    path = tmp_path / "mask.csv"
    path.write_text("1,1,0\n1,1,1\n0,1,1\n")
    mask = read_mask_csv(path, 3, 3)
    assert mask.tolist() == [[True, True, False],
                             [True, True, True],
                             [False, True, True]]
    with pytest.raises(sf.ConfigError):
        read_mask_csv(path, 4, 3)


def test_pgm_writer(tmp_path):
    path = tmp_path / "map.pgm"
    arr = np.array([[0.0, 1.0], [np.nan, 0.5]])
    write_pgm(path, arr)
    text = path.read_text().splitlines()
    assert text[0] == "P2"
    assert text[1] == "2 2"
    assert text[2] == "255"


def test_json_report_sanitizes_nonfinite(tmp_path):
    path = tmp_path / "r.json"
    write_json_report(path, {"a": float("inf"), "b": [np.float64(2.0), np.nan],
                             "c": np.bool_(True), "d": np.int64(3)})
    import json
    data = json.loads(path.read_text())
    assert data == {"a": None, "b": [2.0, None], "c": True, "d": 3}
