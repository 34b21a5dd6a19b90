"""Drawing routines: one function per figure kind.

Each function takes a matplotlib ``Figure`` plus the resolved input
tables and fills the figure in.  No global pyplot state is touched, so
repeated renders of the same data produce identical output.
"""

from __future__ import annotations

import os

import numpy as np
from matplotlib.figure import Figure

from .readers import FigureDataError, Table, pivot_grid2d, pivot_histogram, pivot_particles

#: components with |u| above this count as active in the raster plot;
#: matches the activity threshold used by the run tool's summaries.
ACTIVITY_THRESHOLD = 1e-8

#: quiver plots are thinned so that no axis shows more than this many arrows.
MAX_QUIVER_PER_AXIS = 30


def _stem_label(path: str) -> str:
    stem = os.path.splitext(os.path.basename(path))[0]
    for prefix in ("trajectory_", "lyapunov_", "hist_"):
        if stem.startswith(prefix):
            return stem[len(prefix):]
    return stem


def quiver_stride(n: int, limit: int = MAX_QUIVER_PER_AXIS) -> int:
    """Smallest stride that keeps at most ``limit`` samples along an axis."""
    return max(1, -(-n // limit))


def draw_trajectories(fig: Figure, tables: list[Table], labels: list[str] | None) -> None:
    """Spatial paths, one panel per input table.

    One-dimensional runs plot position against time; two-dimensional
    runs plot the (x1, x2) path of every particle.
    """
    names = labels or [_stem_label(t.path) for t in tables]
    axes = fig.subplots(1, len(tables), sharey=True, squeeze=False)[0]
    for ax, table, name in zip(axes, tables, names):
        times, _, x = pivot_particles(table, "x_")
        if x.shape[2] == 1:
            ax.plot(times, x[:, :, 0], lw=0.6, alpha=0.7)
            ax.set_xlabel("time")
            ax.set_ylabel("position")
        else:
            for i in range(x.shape[1]):
                ax.plot(x[:, i, 0], x[:, i, 1], lw=0.6, alpha=0.7)
            ax.plot(x[0, :, 0], x[0, :, 1], ".", ms=3, color="black")
            ax.set_xlabel("x1")
            ax.set_ylabel("x2")
        ax.set_title(name)
    fig.suptitle("particle trajectories")


def draw_lyapunov(fig: Figure, tables: list[Table], labels: list[str] | None,
                  log_scale: bool) -> None:
    """Velocity-spread decay over time, overlaying all inputs.

    The uncontrolled reference curve from the first table is drawn
    dashed; each table contributes its controlled curve.
    """
    names = labels or [_stem_label(t.path) for t in tables]
    ax = fig.subplots()
    first = tables[0]
    ax.plot(first.col("time"), first.col("V_uncontrolled"),
            "k--", lw=1.2, label="uncontrolled")
    for table, name in zip(tables, names):
        ax.plot(table.col("time"), table.col("V_controlled"), lw=1.2, label=name)
    if log_scale:
        ax.set_yscale("log")
    ax.set_xlabel("time")
    ax.set_ylabel("velocity spread V")
    ax.legend(fontsize=8)
    ax.set_title("alignment decay")


def draw_activation(fig: Figure, table: Table) -> None:
    """Where and when the control acts.

    A per-particle control dump (``particle_id`` column present) becomes
    a raster with one row per particle, shaded at the steps where any
    control component exceeds the activity threshold.  A per-step count
    table becomes a step plot of the active-component count.
    """
    ax = fig.subplots()
    if "particle_id" in table.columns:
        times, ids, u = pivot_particles(table, "u_")
        active = (np.abs(u) > ACTIVITY_THRESHOLD).any(axis=2)
        ax.pcolormesh(
            np.concatenate([times, times[-1:] + (times[-1] - times[-2] if times.size > 1 else 1.0)]),
            np.arange(ids.size + 1) - 0.5,
            active.T.astype(float),
            cmap="Greys", vmin=0.0, vmax=1.0, shading="flat",
        )
        ax.set_xlabel("time")
        ax.set_ylabel("particle")
        ax.set_title("active control per particle")
    else:
        steps = table.col("step")
        counts = table.col("active_count")
        ax.step(steps, counts, where="post", lw=1.2)
        ax.set_xlabel("step")
        ax.set_ylabel("active components")
        ax.set_title("active control components")


def draw_marginal(fig: Figure, table: Table) -> None:
    """Time evolution of a one-dimensional histogram as a heat map."""
    weight_column = "mass" if "mass" in table.columns else "weight"
    times, edges, weights = pivot_histogram(table, weight_column)
    if times.size > 1:
        t_edges = np.concatenate([times, times[-1:] + (times[-1] - times[-2])])
    else:
        t_edges = np.array([times[0], times[0] + 1.0])
    ax = fig.subplots()
    mesh = ax.pcolormesh(t_edges, edges, weights.T, cmap="viridis", shading="flat")
    fig.colorbar(mesh, ax=ax, label=weight_column)
    ax.set_xlabel("time")
    ax.set_ylabel("bin")
    ax.set_title(_stem_label(table.path) + " marginal")


def draw_phase2d(fig: Figure, table: Table) -> None:
    """Planar density with a velocity quiver coloured by control size.

    The occupancy grid is shown as a heat map; cell-mean velocities are
    drawn as arrows on a lattice thinned to at most 30 samples per axis,
    coloured by the magnitude of the cell-mean control.
    """
    x1_edges, x2_edges, mass = pivot_grid2d(table, "mass")
    ax = fig.subplots()
    mesh = ax.pcolormesh(x1_edges, x2_edges, mass.T, cmap="Blues", shading="flat")
    fig.colorbar(mesh, ax=ax, label="mass")

    c1 = 0.5 * (x1_edges[:-1] + x1_edges[1:])
    c2 = 0.5 * (x2_edges[:-1] + x2_edges[1:])
    _, _, v1 = pivot_grid2d(table, "mean_v1")
    _, _, v2 = pivot_grid2d(table, "mean_v2")
    _, _, u1 = pivot_grid2d(table, "mean_u1")
    _, _, u2 = pivot_grid2d(table, "mean_u2")
    s1 = quiver_stride(c1.size)
    s2 = quiver_stride(c2.size)
    grid1, grid2 = np.meshgrid(c1[::s1], c2[::s2], indexing="ij")
    v1s, v2s = v1[::s1, ::s2], v2[::s1, ::s2]
    mag = np.hypot(u1, u2)[::s1, ::s2]
    keep = mass[::s1, ::s2] > 0
    if np.any(keep):
        quiv = ax.quiver(grid1[keep], grid2[keep], v1s[keep], v2s[keep], mag[keep],
                         cmap="autumn_r", width=0.004)
        fig.colorbar(quiv, ax=ax, label="|mean control|")
    time = table.col("time")[0]
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title(f"phase density and velocity field, t = {time:g}")


def validate_kind_inputs(kind: str, tables: list[Table]) -> None:
    """Cross-check column layouts before drawing, for early clear errors."""
    if kind == "trajectories":
        for t in tables:
            t.col("step"), t.col("time"), t.col("particle_id")
            t.cols_with_prefix("x_")
    elif kind == "lyapunov":
        for t in tables:
            t.col("time"), t.col("V_uncontrolled"), t.col("V_controlled")
    elif kind == "activation":
        t = tables[0]
        if "particle_id" in t.columns:
            t.cols_with_prefix("u_")
        else:
            t.col("step"), t.col("active_count")
    elif kind == "marginal":
        t = tables[0]
        t.col("bin_lo"), t.col("bin_hi")
        if "mass" not in t.columns and "weight" not in t.columns:
            raise FigureDataError(
                f"schema mismatch in {t.path}: missing column 'mass'")
    elif kind == "phase2d":
        t = tables[0]
        for name in ("x1_lo", "x1_hi", "x2_lo", "x2_hi", "mass",
                     "mean_v1", "mean_v2", "mean_u1", "mean_u2"):
            t.col(name)
