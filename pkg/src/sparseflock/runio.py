"""File outputs for experiment runs: CSV tables, summaries, manifests.

All CSVs use '.' decimals, comma separators, one header row, and LF line
endings; floats are written with repr (shortest round-trip), so re-running a
command with identical inputs reproduces byte-identical bodies and any value
can be recomputed from the dumps without formatting loss.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from sparseflock.cost import DiagnosticsRow

HIST_BINS = 100
HIST_PAD = 0.05


def format_float(x) -> str:
    """Shortest decimal string that round-trips to the same float."""
    return repr(float(x))


def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def write_metrics(path: str, history: list[DiagnosticsRow]) -> None:
    write_csv(path, DiagnosticsRow.FIELDS, (row.as_tuple() for row in history))


def write_lyapunov(path: str, dt: float, uncontrolled: np.ndarray,
                   controlled: np.ndarray) -> None:
    rows = ((n, n * dt, vu, vc)
            for n, (vu, vc) in enumerate(zip(uncontrolled, controlled)))
    write_csv(path, ["step", "time", "V_uncontrolled", "V_controlled"], rows)


def write_activity(path: str, control: np.ndarray, threshold: float) -> None:
    """Active control components (|u| > threshold) per time step."""
    counts = np.count_nonzero(np.abs(control) > threshold, axis=(1, 2))
    write_csv(path, ["step", "active_count"], enumerate(counts.tolist()))


def _particle_columns(prefix: str, dim: int) -> list[str]:
    return [f"{prefix}_{k + 1}" for k in range(dim)]


def write_trajectory(path: str, x: np.ndarray, v: np.ndarray, dt: float,
                     stride: int = 1) -> None:
    """Long-format dump: one row per (step, particle), x and v columns."""
    n_grid, n, d = x.shape
    header = ["step", "time", "particle_id"] + _particle_columns("x", d) \
        + _particle_columns("v", d)
    ids = range(0, n, stride)

    def rows():
        for step in range(n_grid):
            t = step * dt
            for i in ids:
                yield (step, t, i, *x[step, i], *v[step, i])

    write_csv(path, header, rows())


def write_control(path: str, control: np.ndarray, dt: float,
                  stride: int = 1) -> None:
    n_steps, n, d = control.shape
    header = ["step", "time", "particle_id"] + _particle_columns("u", d)
    ids = range(0, n, stride)

    def rows():
        for step in range(n_steps):
            t = step * dt
            for i in ids:
                yield (step, t, i, *control[step, i])

    write_csv(path, header, rows())


def read_particle_table(path: str):
    """Read a trajectory/control dump back into (steps, ids, values).

    Returns the unique sorted step ids, particle ids, and a dense array of
    shape (n_steps, n_particles, d) holding the value columns.
    """
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    steps = np.unique(data[:, 0].astype(int))
    ids = np.unique(data[:, 2].astype(int))
    values = data[:, 3:].reshape(len(steps), len(ids), len(header) - 3)
    return steps, ids, values


def padded_edges(values: np.ndarray, bins: int = HIST_BINS) -> np.ndarray:
    """Uniform bin edges over the sample range, padded by 5% per side."""
    lo = float(np.min(values))
    hi = float(np.max(values))
    pad = HIST_PAD * (hi - lo) if hi > lo else max(1.0, abs(lo)) * HIST_PAD
    return np.linspace(lo - pad, hi + pad, bins + 1)


def _hist_rows(series, edges, dt, weights=None, normalize=1.0):
    lo, hi = edges[:-1], edges[1:]
    for step, sample in enumerate(series):
        w = None if weights is None else weights[step]
        counts, _ = np.histogram(sample, edges, weights=w)
        t = step * dt
        for b in range(len(lo)):
            yield (step, t, lo[b], hi[b], counts[b] / normalize)


def write_histograms_1d(outdir: str, x: np.ndarray, v: np.ndarray,
                        control: np.ndarray, dt: float) -> list[str]:
    """Marginal tables for 1D runs: mass of x and v per bin and per step,
    plus |u|-weighted control marginals binned by x and by v.

    One fixed binning per table (global range over all steps), so rows are
    comparable across time. Mass columns are normalized to sum to 1 per step;
    control columns accumulate |u| unnormalized.
    """
    n = x.shape[1]
    header = ["step", "time", "bin_lo", "bin_hi", "mass"]
    header_u = ["step", "time", "bin_lo", "bin_hi", "weight"]
    absu = np.abs(control[:, :, 0])
    files = {
        "hist_x.csv": (x[:, :, 0], padded_edges(x), None, n, header),
        "hist_v.csv": (v[:, :, 0], padded_edges(v), None, n, header),
        "hist_u_by_x.csv": (x[:-1, :, 0], padded_edges(x), absu, 1.0, header_u),
        "hist_u_by_v.csv": (v[:-1, :, 0], padded_edges(v), absu, 1.0, header_u),
    }
    written = []
    for name, (series, edges, weights, norm, head) in files.items():
        path = os.path.join(outdir, name)
        write_csv(path, head, _hist_rows(series, edges, dt, weights, norm))
        written.append(path)
    return written


def write_marginal2d(path: str, x_t: np.ndarray, v_t: np.ndarray,
                     u_t: np.ndarray, edges1: np.ndarray, edges2: np.ndarray,
                     step: int, time: float) -> None:
    """2D occupancy grid at one snapshot: mass plus mean velocity and mean
    control per cell (zero where the cell is empty)."""
    n = x_t.shape[0]
    counts, _, _ = np.histogram2d(x_t[:, 0], x_t[:, 1], bins=[edges1, edges2])
    sums = {}
    for name, vec in (("v", v_t), ("u", u_t)):
        for k in range(2):
            s, _, _ = np.histogram2d(x_t[:, 0], x_t[:, 1],
                                     bins=[edges1, edges2],
                                     weights=vec[:, k])
            sums[f"{name}{k + 1}"] = s
    occupied = np.maximum(counts, 1.0)
    header = ["step", "time", "x1_lo", "x1_hi", "x2_lo", "x2_hi", "mass",
              "mean_v1", "mean_v2", "mean_u1", "mean_u2"]

    def rows():
        for a in range(len(edges1) - 1):
            for b in range(len(edges2) - 1):
                yield (step, time, edges1[a], edges1[a + 1],
                       edges2[b], edges2[b + 1], counts[a, b] / n,
                       sums["v1"][a, b] / occupied[a, b],
                       sums["v2"][a, b] / occupied[a, b],
                       sums["u1"][a, b] / occupied[a, b],
                       sums["u2"][a, b] / occupied[a, b])

    write_csv(path, header, rows())


def write_snapshot(path: str, step: int, time: float, x_t: np.ndarray,
                   v_t: np.ndarray, u_t: np.ndarray | None,
                   ids: np.ndarray | None = None) -> None:
    """Phase-space extract at one grid step: one row per particle."""
    n, d = x_t.shape
    if ids is None:
        ids = np.arange(n)
    header = ["step", "time", "particle_id"] + _particle_columns("x", d) \
        + _particle_columns("v", d)
    if u_t is not None:
        header += _particle_columns("u", d)

    def rows():
        for row_i, pid in enumerate(ids):
            base = (step, time, int(pid), *x_t[row_i], *v_t[row_i])
            if u_t is not None:
                base += tuple(u_t[row_i])
            yield base

    write_csv(path, header, rows())


def write_json(path: str, payload: dict) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(path: str, scenario: str, config_echo: dict,
                   wall_time: float, version: str) -> None:
    """Hash every sibling file so consumers can verify a run directory."""
    outdir = os.path.dirname(os.path.abspath(path))
    names = sorted(
        f for f in os.listdir(outdir)
        if f != os.path.basename(path) and os.path.isfile(os.path.join(outdir, f)))
    payload = {
        "artifact_version": version,
        "scenario": scenario,
        "config": config_echo,
        "output_dir": outdir,
        "files": {name: sha256_file(os.path.join(outdir, name)) for name in names},
        "wall_time_seconds": wall_time,
    }
    write_json(path, payload)
