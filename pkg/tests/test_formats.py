import numpy as np
import pytest

from localis.formats import (read_function, read_function_csv, read_mask, read_matrix,
                             write_function, write_function_csv, write_matrix, write_matrix_csv,
                             write_singular_values_csv)
from localis.function_space import RegionMask, SampledFunction, make_grid
from localis.group_core import heisenberg


def test_function_binary_roundtrip(tmp_path, hgrid_small, rng):
    f = SampledFunction(hgrid_small, rng.standard_normal(hgrid_small.size))
    write_function(tmp_path / "f.locf", f)
    raw = (tmp_path / "f.locf").read_bytes()
    assert raw[:4] == b"LOCF" and len(raw) == 16 + hgrid_small.size * 4 * 8
    back = read_function(tmp_path / "f.locf", hgrid_small)
    assert np.array_equal(back.values, f.values)


def test_mask_roundtrip(tmp_path, egrid, rng):
    F = RegionMask(egrid, rng.random(egrid.size) < 0.3)
    write_function(tmp_path / "m.locf", F)
    assert np.array_equal(read_mask(tmp_path / "m.locf", egrid).member, F.member)


def test_function_csv_roundtrip(tmp_path, egrid, rng):
    f = SampledFunction(egrid, rng.standard_normal(egrid.size))
    write_function_csv(tmp_path / "f.csv", f)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "x0,value"
    assert np.array_equal(read_function_csv(tmp_path / "f.csv", egrid).values, f.values)


def test_grid_mismatch(tmp_path, egrid):
    write_function(tmp_path / "f.locf", SampledFunction(egrid, np.ones(egrid.size)))
    other = make_grid(heisenberg(1), 0.5, 2)
    with pytest.raises(ValueError):
        read_function(tmp_path / "f.locf", other)


def test_matrix_roundtrip(tmp_path, rng):
    A = rng.standard_normal((7, 5))
    write_matrix(tmp_path / "a.locm", A)
    assert np.array_equal(read_matrix(tmp_path / "a.locm"), A)
    with pytest.raises(ValueError):
        read_matrix_bad = tmp_path / "bad.locm"
        read_matrix_bad.write_bytes(b"NOPE" + bytes(12))
        read_matrix(read_matrix_bad)


def test_matrix_complex_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_matrix(tmp_path / "c.locm", np.array([[1 + 1j]]))


def test_csv_writers(tmp_path, rng):
    A = rng.standard_normal((3, 3))
    write_matrix_csv(tmp_path / "a.csv", A)
    assert np.array_equal(np.loadtxt(tmp_path / "a.csv", delimiter=","), A)
    write_singular_values_csv(tmp_path / "s.csv", [3.0, 1.0])
    assert (tmp_path / "s.csv").read_text().splitlines() == ["index,sigma", "0,3.0", "1,1.0"]
