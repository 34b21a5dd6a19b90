"""Reader errors must name the offending file (and column)."""

import os

import numpy as np
import pytest

from figsuite.readers import (FigureDataError, pivot_grid2d, pivot_histogram,
                              pivot_particles, read_table)

from conftest import MARGINAL2D_HEADER, marginal2d_rows, write_csv


def test_missing_file_names_path(tmp_path):
    path = str(tmp_path / "nope.csv")
    with pytest.raises(FigureDataError, match="missing input file") as err:
        read_table(path)
    assert path in str(err.value)


def test_empty_body_names_file(tmp_path):
    path = str(tmp_path / "empty.csv")
    with open(path, "w") as fh:
        fh.write("step,time\n")
    with pytest.raises(FigureDataError, match="empty data file") as err:
        read_table(path)
    assert "empty.csv" in str(err.value)


def test_zero_byte_file_names_file(tmp_path):
    path = str(tmp_path / "zero.csv")
    open(path, "w").close()
    with pytest.raises(FigureDataError, match="empty data file"):
        read_table(path)


def test_missing_required_column_names_file_and_column(tmp_path):
    path = str(tmp_path / "table.csv")
    write_csv(path, ["step", "time"], [(0, 0.0), (1, 0.1)])
    with pytest.raises(FigureDataError) as err:
        read_table(path, required=("step", "V_controlled"))
    message = str(err.value)
    assert "table.csv" in message and "V_controlled" in message


def test_header_data_width_mismatch(tmp_path):
    path = str(tmp_path / "wide.csv")
    with open(path, "w") as fh:
        fh.write("a,b,c\n1,2\n")
    with pytest.raises(FigureDataError, match="wide.csv"):
        read_table(path)


def test_non_numeric_cell_is_malformed(tmp_path):
    path = str(tmp_path / "bad.csv")
    with open(path, "w") as fh:
        fh.write("a,b\n1,oops\n")
    with pytest.raises(FigureDataError, match="malformed data file"):
        read_table(path)


def test_round_trip_columns(tmp_path):
    path = str(tmp_path / "ok.csv")
    write_csv(path, ["step", "value"], [(0, 1.5), (1, -2.25)])
    table = read_table(path, required=("step", "value"))
    assert table.columns == ["step", "value"]
    assert np.array_equal(table.col("value"), [1.5, -2.25])


def test_pivot_particles_shapes(run_dir):
    table = read_table(os.path.join(run_dir, "trajectory_controlled.csv"))
    times, ids, x = pivot_particles(table, "x_")
    assert times.shape == (6,)
    assert list(ids) == [0, 1, 2]
    assert x.shape == (6, 3, 1)
    assert x[0, 1, 0] == pytest.approx(0.3)


def test_pivot_particles_ragged_rows(tmp_path):
    path = str(tmp_path / "ragged.csv")
    rows = [(0, 0.0, 0, 1.0), (0, 0.0, 1, 2.0), (1, 0.1, 0, 3.0)]
    write_csv(path, ["step", "time", "particle_id", "x_1"], rows)
    table = read_table(path)
    with pytest.raises(FigureDataError, match="ragged.csv"):
        pivot_particles(table, "x_")


def test_pivot_histogram(run_dir):
    table = read_table(os.path.join(run_dir, "hist_x.csv"))
    times, edges, weights = pivot_histogram(table, "mass")
    assert weights.shape == (5, 4)
    assert edges.shape == (5,)
    assert np.all(np.diff(edges) > 0)
    assert np.allclose(weights.sum(axis=1), 1.0)


def test_pivot_grid2d(tmp_path):
    path = str(tmp_path / "grid.csv")
    write_csv(path, MARGINAL2D_HEADER, marginal2d_rows(0, 0.0, 3, 4))
    table = read_table(path)
    e1, e2, mass = pivot_grid2d(table, "mass")
    assert e1.shape == (4,) and e2.shape == (5,)
    assert mass.shape == (3, 4)
    assert mass.sum() == pytest.approx(1.0)
