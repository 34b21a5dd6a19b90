"""CSV readers for run-directory tables.

Every loader validates the file against the column layout it needs and
raises :class:`FigureDataError` naming the offending file (and column,
when the problem is a header mismatch).  All tables are plain
comma-separated text with a single header line and float-formatted
cells, so ``numpy.loadtxt`` does the heavy lifting.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np


class FigureDataError(ValueError):
    """Raised when an input table is missing, empty, or mis-shaped."""


@dataclass
class Table:
    """A parsed CSV: header names plus a dense float matrix."""

    path: str
    columns: list[str]
    data: np.ndarray  # shape (rows, len(columns))

    def col(self, name: str) -> np.ndarray:
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise FigureDataError(
                f"schema mismatch in {self.path}: missing column {name!r}"
            ) from None
        return self.data[:, idx]

    def cols_with_prefix(self, prefix: str) -> np.ndarray:
        idx = [i for i, c in enumerate(self.columns) if c.startswith(prefix)]
        if not idx:
            raise FigureDataError(
                f"schema mismatch in {self.path}: missing column {prefix + '1'!r}"
            )
        return self.data[:, idx]


def read_table(path: str, required: tuple[str, ...] = ()) -> Table:
    """Load a CSV into a :class:`Table`, checking the required columns."""
    if not os.path.isfile(path):
        raise FigureDataError(f"missing input file: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header:
            raise FigureDataError(f"empty data file: {path}")
        columns = header.split(",")
        try:
            with warnings.catch_warnings():
                # an empty body is diagnosed below with a clearer message
                warnings.simplefilter("ignore", UserWarning)
                data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise FigureDataError(f"malformed data file: {path} ({exc})") from exc
    if data.size == 0:
        raise FigureDataError(f"empty data file: {path}")
    if data.shape[1] != len(columns):
        raise FigureDataError(
            f"schema mismatch in {path}: {len(columns)} header names "
            f"but {data.shape[1]} data columns"
        )
    table = Table(path=path, columns=columns, data=data)
    for name in required:
        table.col(name)
    return table


def pivot_particles(table: Table, prefix: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reshape a long (step, particle) table into a dense array.

    Returns ``(times, particle_ids, values)`` where ``values`` has shape
    ``(n_steps, n_particles, n_components)`` and the component axis
    collects the ``prefix``-numbered columns (``x_1``, ``x_2``, ...).
    Rows are expected step-major with particles in a fixed order inside
    each step, which is how the run tool writes them.
    """
    steps = table.col("step")
    ids = table.col("particle_id")
    values = table.cols_with_prefix(prefix)
    unique_steps, first_rows = np.unique(steps, return_index=True)
    n_steps = unique_steps.size
    n_particles = ids.size // n_steps
    if n_steps * n_particles != ids.size:
        raise FigureDataError(
            f"schema mismatch in {table.path}: rows do not factor into "
            f"{n_steps} steps of equal particle count"
        )
    times = table.col("time")[first_rows]
    particle_ids = ids[:n_particles].astype(int)
    dense = values.reshape(n_steps, n_particles, values.shape[1])
    return times, particle_ids, dense


def pivot_histogram(table: Table, weight_column: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reshape a long histogram table into ``(times, edges, weights)``.

    ``weights`` has shape ``(n_steps, n_bins)``; ``edges`` has length
    ``n_bins + 1``.  Rows are step-major with bins in a fixed order.
    """
    steps = table.col("step")
    lo = table.col("bin_lo")
    hi = table.col("bin_hi")
    weights = table.col(weight_column)
    unique_steps, first_rows = np.unique(steps, return_index=True)
    n_steps = unique_steps.size
    n_bins = steps.size // n_steps
    if n_steps * n_bins != steps.size:
        raise FigureDataError(
            f"schema mismatch in {table.path}: rows do not factor into "
            f"{n_steps} steps of equal bin count"
        )
    times = table.col("time")[first_rows]
    edges = np.concatenate([lo[:n_bins], hi[n_bins - 1 : n_bins]])
    return times, edges, weights.reshape(n_steps, n_bins)


def pivot_grid2d(table: Table, column: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reshape a 2-d cell table into ``(x1_edges, x2_edges, grid)``.

    Rows enumerate cells with the first coordinate varying slowest.
    ``grid`` has shape ``(n1, n2)`` matching the returned edge arrays.
    """
    lo1 = table.col("x1_lo")
    lo2 = table.col("x2_lo")
    values = table.col(column)
    edges1 = np.unique(lo1)
    edges2 = np.unique(lo2)
    n1, n2 = edges1.size, edges2.size
    if n1 * n2 != values.size:
        raise FigureDataError(
            f"schema mismatch in {table.path}: {values.size} cells do not "
            f"fill a {n1}x{n2} grid"
        )
    hi1 = table.col("x1_hi").reshape(n1, n2)
    hi2 = table.col("x2_hi").reshape(n1, n2)
    x1_edges = np.concatenate([edges1, hi1[-1:, 0]])
    x2_edges = np.concatenate([edges2, hi2[0, -1:]])
    return x1_edges, x2_edges, values.reshape(n1, n2)
