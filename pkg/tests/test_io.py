import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dnch import convex as cx
from dnch.grid import Grid
from dnch.io import SERIES_COLUMNS, read_field, read_table, write_field, write_gnuplot, write_series, write_table
from dnch.model import CosineProfile, ModelParams
from dnch.stepper import SolverConfig, run

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@given(rows=st.lists(st.tuples(finite, finite, st.integers(-10**6, 10**6)), max_size=20))
def test_table_round_trip_is_exact(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("t") / "x.csv"
    write_table(path, ("a", "b", "c"), rows)
    header, data = read_table(path, ("a", "b", "c"))
    assert header == ["a", "b", "c"]
    assert data.shape == (len(rows), 3)
    for row, back in zip(rows, data):
        assert tuple(back) == tuple(float(x) for x in row)


def test_nan_and_bool(tmp_path):
    p = tmp_path / "x.csv"
    write_table(p, ("a", "b"), [(math.nan, True)])
    _, data = read_table(p)
    assert math.isnan(data[0, 0]) and data[0, 1] == 1.0


def test_schema_mismatch(tmp_path):
    p = tmp_path / "x.csv"
    write_table(p, ("a",), [(1.0,)])
    with pytest.raises(ValueError):
        read_table(p, ("b",))
    with pytest.raises(ValueError):
        write_table(p, ("a", "b"), [(1.0,)])


def test_series_files(tmp_path):
    p = ModelParams(cx.double_well(), cx.SignPlay(), u0=CosineProfile(0.0, 0.3, 1), T=0.05)
    traj = run(p, SolverConfig(), Grid.uniform(17))
    paths = write_series(tmp_path, traj)
    assert len(paths) == len(SERIES_COLUMNS)
    header, data = read_table(paths[0], SERIES_COLUMNS)
    assert data.shape == (6, len(SERIES_COLUMNS))
    assert np.array_equal(data[:, 0], traj.times)
    _, energy = read_table(tmp_path / "series_energy.csv", ("t", "energy"))
    assert np.array_equal(energy[:, 1], data[:, 3])


@pytest.mark.parametrize("shape", [(17,), (5, 7)])
def test_field_round_trip(tmp_path, shape, rng):
    g = Grid.uniform(shape, (1.0, 2.5)[: len(shape)])
    u = rng.standard_normal(g.shape)
    write_field(tmp_path / "u.csv", g, u, "u", t=0.125)
    g2, u2, meta = read_field(tmp_path / "u.csv")
    assert g2.shape == g.shape and np.allclose(g2.h, g.h, rtol=0, atol=0)
    assert np.array_equal(u2, u)
    assert meta == {"field": "u", "t": 0.125}


def test_gnuplot_script(tmp_path):
    p = tmp_path / "d.csv"
    write_table(p, ("tau", "error"), [(1.0, 2.0), (0.5, 1.0)])
    gp = write_gnuplot(str(p), logscale=True)
    text = open(gp).read()
    assert "set logscale xy" in text and "'d.csv' using 1:2" in text
