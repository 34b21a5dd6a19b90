"""Figure suite for flocking-control run directories.

Turns the CSV/JSON tables written by the ``sparseflock`` command line
tool into publication-style figures.  The package never imports the
simulation code: it consumes only the documented table layouts, so it
can render archived run directories produced elsewhere.

Two entry points:

``render(spec)``
    draw a single figure described by a :class:`FigureSpec`;

``render_all(directory)``
    inspect a run or sweep directory, draw every figure its tables
    support, and return the list of files written.
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass, field

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from . import plots
from .readers import FigureDataError, read_table

__version__ = "0.1.0"

__all__ = ["FigureSpec", "render", "render_all", "FigureDataError", "KINDS",
           "__version__"]

#: supported figure kinds, mapped to (min inputs, max inputs or None).
KINDS = {
    "trajectories": (1, 4),
    "lyapunov": (1, None),
    "activation": (1, 1),
    "marginal": (1, 1),
    "phase2d": (1, 1),
}

_FIGSIZES = {
    "trajectories": (4.2, 3.4),  # per panel
    "lyapunov": (5.2, 3.6),
    "activation": (5.2, 3.6),
    "marginal": (5.2, 3.6),
    "phase2d": (5.6, 4.4),
}


@dataclass
class FigureSpec:
    """Everything needed to draw one figure.

    ``kind`` selects the drawing routine, ``inputs`` are CSV paths in
    the run-directory layout, and ``output`` is the image path whose
    extension (``.png`` or ``.pdf``) selects the format.  ``labels``
    override the per-input legend names and ``log_scale`` overrides the
    kind's default axis scaling (only the decay plot uses a log axis by
    default).
    """

    kind: str
    inputs: list[str] = field(default_factory=list)
    output: str = "figure.png"
    labels: list[str] | None = None
    log_scale: bool | None = None
    dpi: int = 150


def _save(fig: Figure, path: str, dpi: int) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        fig.savefig(path, format="png", dpi=dpi)
    elif ext == ".pdf":
        # A fixed (empty) creation date keeps repeated renders
        # byte-identical.
        fig.savefig(path, format="pdf", metadata={"CreationDate": None})
    else:
        raise ValueError(f"unsupported output format {ext!r} for {path}")


def render(spec: FigureSpec) -> str:
    """Draw the figure described by ``spec``; returns the output path."""
    if spec.kind not in KINDS:
        raise ValueError(
            f"unknown figure kind {spec.kind!r}; expected one of "
            + ", ".join(sorted(KINDS)))
    lo, hi = KINDS[spec.kind]
    if len(spec.inputs) < lo or (hi is not None and len(spec.inputs) > hi):
        raise ValueError(
            f"figure kind {spec.kind!r} takes "
            + (f"{lo}" if hi == lo else f"{lo}..{hi or 'any'}")
            + f" input files, got {len(spec.inputs)}")

    tables = [read_table(path) for path in spec.inputs]
    plots.validate_kind_inputs(spec.kind, tables)

    w, h = _FIGSIZES[spec.kind]
    if spec.kind == "trajectories":
        w *= len(tables)
    fig = Figure(figsize=(w, h))
    FigureCanvasAgg(fig)

    if spec.kind == "trajectories":
        plots.draw_trajectories(fig, tables, spec.labels)
    elif spec.kind == "lyapunov":
        log_scale = True if spec.log_scale is None else spec.log_scale
        plots.draw_lyapunov(fig, tables, spec.labels, log_scale)
    elif spec.kind == "activation":
        plots.draw_activation(fig, tables[0])
    elif spec.kind == "marginal":
        plots.draw_marginal(fig, tables[0])
    elif spec.kind == "phase2d":
        plots.draw_phase2d(fig, tables[0])
    fig.tight_layout()
    _save(fig, spec.output, spec.dpi)
    return spec.output


def _beta_suffix(name: str) -> str:
    return name[len("beta_"):]


def _sort_key(name: str):
    try:
        return (0, float(_beta_suffix(name)))
    except ValueError:
        return (1, name)


def _plan_sweep(directory: str) -> tuple[list[tuple[str, str, list[str], list[str] | None]],
                                         list[tuple[str, str]]]:
    plan: list[tuple[str, str, list[str], list[str] | None]] = []
    skipped: list[tuple[str, str]] = []
    subdirs = sorted(
        (d for d in os.listdir(directory)
         if d.startswith("beta_") and os.path.isdir(os.path.join(directory, d))),
        key=_sort_key)

    lyap_inputs, lyap_labels = [], []
    for sub in subdirs:
        path = os.path.join(directory, sub, "lyapunov.csv")
        if os.path.isfile(path):
            lyap_inputs.append(path)
            lyap_labels.append("beta=" + _beta_suffix(sub))
        else:
            skipped.append(("lyapunov overlay", f"{path} not found"))
    if lyap_inputs:
        plan.append(("lyapunov", "lyapunov", lyap_inputs, lyap_labels))

    traj_dir = next(
        (sub for sub in subdirs
         if os.path.isfile(os.path.join(directory, sub, "trajectory_controlled.csv"))),
        None)
    if traj_dir is not None:
        inputs = []
        unc = os.path.join(directory, traj_dir, "trajectory_uncontrolled.csv")
        if os.path.isfile(unc):
            inputs.append(unc)
        inputs.append(os.path.join(directory, traj_dir, "trajectory_controlled.csv"))
        plan.append(("trajectories", "trajectories", inputs, None))
    else:
        skipped.append(("trajectories",
                        "no trajectory_controlled.csv in any beta_* directory"))

    for sub in subdirs:
        name = "activation_" + sub
        for candidate in ("control.csv", "control_activity.csv"):
            path = os.path.join(directory, sub, candidate)
            if os.path.isfile(path):
                plan.append((name, "activation", [path], None))
                break
        else:
            skipped.append((name, f"no control tables in {os.path.join(directory, sub)}"))
    return plan, skipped


def _plan_run(directory: str) -> tuple[list[tuple[str, str, list[str], list[str] | None]],
                                       list[tuple[str, str]]]:
    plan: list[tuple[str, str, list[str], list[str] | None]] = []
    skipped: list[tuple[str, str]] = []

    def present(name: str) -> str | None:
        path = os.path.join(directory, name)
        return path if os.path.isfile(path) else None

    lyap = present("lyapunov.csv")
    if lyap:
        plan.append(("lyapunov", "lyapunov", [lyap], None))
    else:
        skipped.append(("lyapunov", "lyapunov.csv not found"))

    activation = present("control.csv") or present("control_activity.csv")
    if activation:
        plan.append(("activation", "activation", [activation], None))
    else:
        skipped.append(("activation", "no control tables found"))

    controlled = present("trajectory_controlled.csv")
    if controlled:
        inputs = []
        unc = present("trajectory_uncontrolled.csv")
        if unc:
            inputs.append(unc)
        inputs.append(controlled)
        plan.append(("trajectories", "trajectories", inputs, None))
    else:
        skipped.append(("trajectories", "trajectory_controlled.csv not found"))

    hists = ("hist_x.csv", "hist_v.csv", "hist_u_by_x.csv", "hist_u_by_v.csv")
    for hist in hists:
        path = present(hist)
        name = "marginal_" + hist[len("hist_"):-len(".csv")]
        if path:
            plan.append((name, "marginal", [path], None))
        else:
            skipped.append((name, f"{hist} not found"))

    grids = sorted(glob.glob(os.path.join(directory, "marginal2d_t*.csv")))
    if grids:
        for path in grids:
            stem = os.path.splitext(os.path.basename(path))[0]
            name = "phase_" + stem[len("marginal2d_"):]
            plan.append((name, "phase2d", [path], None))
    else:
        skipped.append(("phase2d", "no marginal2d_t*.csv tables found"))
    return plan, skipped


def render_all(directory: str, formats: tuple[str, ...] = ("png",),
               dpi: int = 150) -> list[str]:
    """Render every figure a run or sweep directory supports.

    A directory containing ``sweep_summary.csv`` is treated as a sweep
    (overlayed decay curves, one activation raster per ``beta_*``
    subdirectory, trajectories from the first subdirectory with dumps);
    anything else is treated as a single run.  Missing inputs are
    skipped with a note on stdout, never an error.  Figures are written
    to ``<directory>/figures`` and the list of files is returned.
    """
    directory = os.fspath(directory)
    if not os.path.isdir(directory):
        raise FigureDataError(f"missing run directory: {directory}")

    if os.path.isfile(os.path.join(directory, "sweep_summary.csv")):
        plan, skipped = _plan_sweep(directory)
    else:
        plan, skipped = _plan_run(directory)

    outdir = os.path.join(directory, "figures")
    written: list[str] = []
    for name, kind, inputs, labels in plan:
        for fmt in formats:
            spec = FigureSpec(kind=kind, inputs=list(inputs),
                              output=os.path.join(outdir, f"{name}.{fmt}"),
                              labels=labels, dpi=dpi)
            written.append(render(spec))
    for name, reason in skipped:
        print(f"figures: skipped {name}: {reason}")
    if not plan and not skipped:
        print(f"figures: no recognized tables in {directory}")
    return written
