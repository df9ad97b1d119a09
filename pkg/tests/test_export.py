import os

import numpy as np
import pytest

from conftest import SPHERE_BOX, sphere
from magsurf.calculus import ScalarField, VectorField
from magsurf.coords import cartesian_chart
from magsurf.export import atomic_write, grid_csv, points_csv, sample_grid, to_json, vtk_structured_grid
from magsurf.report import GridSpec


def _cart_data(n=(2, 3, 2)):
    ch = cartesian_chart()
    V = VectorField(ch, lambda u, v, w: np.stack([u, v, w]))
    s = ScalarField(ch, lambda u, v, w: u + 10 * v + 100 * w)
    return sample_grid(GridSpec(((0.0, 1.0), (0.0, 2.0), (0.0, 1.0)), n), {"r": V}, {"s": s})


def test_vtk_layout():
    text = vtk_structured_grid(_cart_data(), "demo")
    lines = text.splitlines()
    assert lines[0] == "# vtk DataFile Version 3.0" and lines[1] == "demo"
    assert lines[2:5] == ["ASCII", "DATASET STRUCTURED_GRID", "DIMENSIONS 2 3 2"]
    assert lines[5] == "POINTS 12 double"
    # first index varies fastest
    assert lines[6] == "0.0 0.0 0.0" and lines[7] == "1.0 0.0 0.0" and lines[8] == "0.0 1.0 0.0"
    assert "POINT_DATA 12" in lines and "SCALARS s double 1" in lines and "VECTORS r double" in lines
    i = lines.index("SCALARS s double 1")
    assert [float(x) for x in lines[i + 2:i + 5]] == [0.0, 1.0, 10.0]


def test_excluded_points_marked_invalid():
    data = sample_grid(GridSpec(((0.0, np.pi), (0.0, 1.0), (1.0, 2.0)), 3), {"B": sphere().B})
    assert data.valid.sum() == 9 and not data.valid[0].any() and not data.valid[2].any()
    assert np.all(data.vectors["B"][:, 0] == 0.0)
    text = vtk_structured_grid(data)
    i = text.splitlines().index("SCALARS valid int 1")
    assert text.splitlines()[i + 2:i + 5] == ["0", "1", "0"]


def test_vector_export_is_cartesian():
    sol = sphere()
    data = sample_grid(GridSpec(SPHERE_BOX, 3), {"B": sol.B})
    u, v, w = data.uvw[:, 1, 1, 1]
    np.testing.assert_allclose(data.vectors["B"][:, 1, 1, 1], sol.B.cartesian(u, v, w).ravel(), rtol=1e-15)


def test_grid_csv_rows():
    lines = grid_csv(_cart_data()).splitlines()
    assert lines[0] == "u,v,w,x,y,z,r_x,r_y,r_z,s"
    assert len(lines) == 13
    assert lines[-1].split(",")[-1] == repr(1.0 + 20.0 + 100.0)


def test_points_csv_and_json():
    assert points_csv({"a": [1, 2], "b": np.array([0.5, 0.25])}) == "a,b\n1.0,0.5\n2.0,0.25\n"
    assert to_json({"x": np.arange(2), "y": np.float64(1.5)}) == '{\n  "x": [\n    0,\n    1\n  ],\n  "y": 1.5\n}'
    with pytest.raises(TypeError):
        to_json({"z": object()})


def test_exports_are_deterministic():
    assert vtk_structured_grid(_cart_data()) == vtk_structured_grid(_cart_data())
    assert grid_csv(_cart_data()) == grid_csv(_cart_data())


def test_sample_grid_needs_fields():
    with pytest.raises(ValueError):
        sample_grid(GridSpec(((0, 1),) * 3, 2))


def test_atomic_write(tmp_path):
    p = atomic_write(tmp_path / "sub" / "a.txt", "hello\n")
    assert p.read_text() == "hello\n"
    atomic_write(p, "again\n")
    assert p.read_text() == "again\n"
    assert sorted(os.listdir(p.parent)) == ["a.txt"]  # no temporary files left behind


def test_atomic_write_failure_keeps_old_file(tmp_path):
    p = atomic_write(tmp_path / "a.txt", "old\n")

    with pytest.raises(TypeError):
        atomic_write(p, 123)  # not text
    assert p.read_text() == "old\n"
    assert sorted(os.listdir(tmp_path)) == ["a.txt"]
