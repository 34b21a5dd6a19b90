"""Command line driver: scenario runs, beta sweeps, snapshot extraction.

Exit codes: 0 success, 1 usage/configuration error, 2 numerical failure.
Output root defaults to $SPARSEFLOCK_OUTDIR, then ./runs.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from sparseflock import __version__
from sparseflock.config import (
    ConfigError,
    PRESET_NAMES,
    ValidatedConfig,
    config_to_dict,
    load_config,
    preset,
    rescale_particles,
    validate,
)
from sparseflock.cost import count_active, evaluate
from sparseflock.dynamics import Trajectory
from sparseflock.optimizer import run as optimize, simulate_uncontrolled
from sparseflock import runio

_ENV_OUTDIR = "SPARSEFLOCK_OUTDIR"
_REDUCED_TEST2_PARTICLES = 4000


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad flags; this artifact reserves 2
    for numerical failures, so usage errors are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_budget(text: str) -> float:
    if text.lower() in ("unbounded", "inf", "infinity"):
        return math.inf
    return float(text)


def _parse_floats(text: str) -> list[float]:
    items = [piece for piece in text.split(",") if piece.strip()]
    return [float(piece) for piece in items]


# (flag, config field, parser) triples mirroring ScenarioConfig.
_OVERRIDES = [
    ("--n-particles", "n_particles", int),
    ("--batch-size", "batch_size", int),
    ("--dt", "dt", float),
    ("--n-steps", "n_steps", int),
    ("--kappa", "kappa", float),
    ("--alpha", "alpha", float),
    ("--beta", "beta", float),
    ("--budget", "budget", _parse_budget),
    ("--step-size", "step_size", float),
    ("--relaxation", "relaxation", float),
    ("--tol", "tol", float),
    ("--max-iters", "max_iters", int),
    ("--seed", "seed", int),
    ("--activity-threshold", "activity_threshold", float),
]


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scenario", required=True,
                   help="preset name (%s) or config file path" % "/".join(PRESET_NAMES))
    for flag, field, caster in _OVERRIDES:
        p.add_argument(flag, dest=field, type=caster, default=None)
    p.add_argument("--outdir", default=None, help="output directory")
    p.add_argument("--full-scale", action="store_true",
                   help="keep test2 at its full particle count")
    p.add_argument("--dump-trajectory", action="store_true",
                   help="write per-particle trajectory tables")
    p.add_argument("--particle-stride", type=int, default=1,
                   help="keep every k-th particle in dumps")
    p.add_argument("--redraw-batches", action="store_true",
                   help="draw a fresh batch schedule every iteration")
    p.add_argument("--snapshot-times", type=_parse_floats, default=None,
                   help="comma-separated times for 2D marginal files")


def _resolve_config(args) -> tuple[ValidatedConfig, str]:
    """Scenario name or config path plus CLI overrides -> validated config."""
    name = args.scenario
    if name in PRESET_NAMES:
        cfg = preset(name)
        if name == "test2" and not args.full_scale:
            cfg = rescale_particles(cfg, _REDUCED_TEST2_PARTICLES)
        label = name
    elif os.path.isfile(name):
        cfg = load_config(name)
        label = os.path.splitext(os.path.basename(name))[0]
    else:
        raise ConfigError(f"unknown scenario (not a preset or file: {name!r})")

    changes = {}
    for _, field, _ in _OVERRIDES:
        value = getattr(args, field)
        if value is not None:
            changes[field] = value
    if "n_particles" in changes and "batch_size" not in changes:
        changes["batch_size"] = min(cfg.batch_size, changes["n_particles"])
    if changes.keys() & {"dt", "n_steps"} and getattr(cfg, "horizon", None):
        changes.setdefault("horizon", None)  # grid overrides win over declared T
    if changes:
        cfg = dataclasses.replace(cfg, **changes)
    return validate(cfg), label


def _lyapunov_series(traj: Trajectory) -> np.ndarray:
    dev = traj.v - traj.v.mean(axis=1, keepdims=True)
    return np.sum(dev * dev, axis=(1, 2)) / traj.v.shape[1]


def _default_snapshot_times(cfg: ValidatedConfig) -> list[float]:
    horizon = cfg.n_steps * cfg.dt
    return [0.0, 0.4 * horizon, horizon]


def _execute_run(cfg: ValidatedConfig, outdir: str, label: str,
                 dump_trajectory: bool, stride: int, redraw: bool,
                 snapshot_times: list[float] | None) -> dict:
    """Simulate, optimize, and write the full output set; returns the summary."""
    os.makedirs(outdir, exist_ok=True)
    t0 = time.perf_counter()

    traj_unc, series_unc = simulate_uncontrolled(cfg)
    result = optimize(cfg, redraw_batches=redraw)
    traj = result.final_trajectory
    series = _lyapunov_series(traj)
    control = result.feasible_control
    cost = evaluate(traj, control, cfg)

    runio.write_metrics(os.path.join(outdir, "metrics.csv"), result.history)
    runio.write_lyapunov(os.path.join(outdir, "lyapunov.csv"), cfg.dt,
                         series_unc, series)
    runio.write_activity(os.path.join(outdir, "control_activity.csv"),
                         control, cfg.activity_threshold)
    runio.write_control(os.path.join(outdir, "control.csv"), control,
                        cfg.dt, stride)
    if dump_trajectory:
        runio.write_trajectory(os.path.join(outdir, "trajectory_controlled.csv"),
                               traj.x, traj.v, cfg.dt, stride)
        runio.write_trajectory(os.path.join(outdir, "trajectory_uncontrolled.csv"),
                               traj_unc.x, traj_unc.v, cfg.dt, stride)
    if cfg.dim == 1:
        runio.write_histograms_1d(outdir, traj.x, traj.v, control, cfg.dt)
    elif cfg.dim == 2:
        times = snapshot_times or _default_snapshot_times(cfg)
        edges1 = runio.padded_edges(traj.x[:, :, 0])
        edges2 = runio.padded_edges(traj.x[:, :, 1])
        for t in times:
            step = _nearest_step(t, cfg)
            u_t = control[step] if step < cfg.n_steps else np.zeros_like(traj.v[step])
            path = os.path.join(outdir, f"marginal2d_t{step * cfg.dt:g}.csv")
            runio.write_marginal2d(path, traj.x[step], traj.v[step], u_t,
                                   edges1, edges2, step, step * cfg.dt)

    total = cfg.n_steps * cfg.n_particles * cfg.dim
    active = count_active(control, cfg.activity_threshold)
    wall = time.perf_counter() - t0
    summary = {
        "scenario": label,
        "j1": cost.j1,
        "j2": cost.j2,
        "total_cost": cost.j1 + cost.j2,
        "v0": float(series[0]),
        "v_terminal_controlled": float(series[-1]),
        "v_terminal_uncontrolled": float(series_unc[-1]),
        "consensus_ratio": float(series[-1] / series[0]),
        "uncontrolled_ratio": float(series_unc[-1] / series_unc[0]),
        "active_components": active,
        "inactive_components": total - active,
        "total_components": total,
        "budget": None if math.isinf(cfg.budget) else cfg.budget,
        "budget_used": float(np.sum(np.abs(control))),
        "iterations": result.iterations,
        "converged": result.converged,
        "residual": result.history[-1].residual if result.history else 0.0,
        "wall_time_seconds": wall,
    }
    runio.write_json(os.path.join(outdir, "summary.json"), summary)
    runio.write_manifest(os.path.join(outdir, "manifest.json"), label,
                         config_to_dict(cfg), wall, __version__)
    return summary


def _nearest_step(t: float, cfg: ValidatedConfig) -> int:
    horizon = cfg.n_steps * cfg.dt
    if t > horizon + 1e-12:
        print(f"warning: time {t:g} beyond horizon {horizon:g}, clamped",
              file=sys.stderr)
    return min(cfg.n_steps, max(0, round(t / cfg.dt)))


def _output_root() -> str:
    return os.environ.get(_ENV_OUTDIR, "runs")


def cmd_run(args) -> int:
    cfg, label = _resolve_config(args)
    outdir = args.outdir or os.path.join(_output_root(), label)
    summary = _execute_run(cfg, outdir, label, args.dump_trajectory,
                           args.particle_stride, args.redraw_batches,
                           args.snapshot_times)
    print(f"{label}: V(T)/V(0)={summary['consensus_ratio']:.3e} "
          f"iterations={summary['iterations']} converged={summary['converged']} "
          f"-> {outdir}")
    return 0


def cmd_sweep(args) -> int:
    if not args.betas:
        print("sweep: empty beta list", file=sys.stderr)
        return 1
    cfg, label = _resolve_config(args)
    outdir = args.outdir or os.path.join(_output_root(), f"{label}_sweep")
    os.makedirs(outdir, exist_ok=True)

    jobs = []
    for beta in args.betas:
        sub_cfg = validate(dataclasses.replace(cfg, beta=beta))
        sub_dir = os.path.join(outdir, f"beta_{beta:g}")
        jobs.append((beta, sub_cfg, sub_dir))

    rows = []
    failures = []

    def record(beta, outcome):
        if isinstance(outcome, Exception):
            failures.append((beta, outcome))
            print(f"sweep beta={beta:g} failed: {outcome}", file=sys.stderr)
        else:
            rows.append((beta, outcome["v_terminal_controlled"],
                         outcome["inactive_components"], outcome["iterations"],
                         outcome["j1"], outcome["j2"]))

    if args.parallel:
        with ProcessPoolExecutor() as pool:
            futures = [(beta, pool.submit(
                _execute_run, sub_cfg, sub_dir, label, args.dump_trajectory,
                args.particle_stride, args.redraw_batches, args.snapshot_times))
                for beta, sub_cfg, sub_dir in jobs]
            for beta, fut in futures:
                try:
                    record(beta, fut.result())
                except Exception as exc:  # noqa: BLE001 - recorded per run
                    record(beta, exc)
    else:
        for beta, sub_cfg, sub_dir in jobs:
            try:
                record(beta, _execute_run(
                    sub_cfg, sub_dir, label, args.dump_trajectory,
                    args.particle_stride, args.redraw_batches,
                    args.snapshot_times))
            except Exception as exc:  # noqa: BLE001 - recorded per run
                record(beta, exc)

    runio.write_csv(
        os.path.join(outdir, "sweep_summary.csv"),
        ["beta", "v_terminal", "inactive_components", "iterations", "j1", "j2"],
        sorted(rows))
    print(f"sweep: {len(rows)} succeeded, {len(failures)} failed -> {outdir}")
    return 2 if failures else 0


def cmd_snapshot(args) -> int:
    traj_path = os.path.join(args.run_dir, "trajectory_controlled.csv")
    if not os.path.isfile(traj_path):
        print(f"snapshot: missing trajectory dump ({traj_path})", file=sys.stderr)
        return 1
    steps, ids, values = runio.read_particle_table(traj_path)
    d = values.shape[2] // 2
    x, v = values[:, :, :d], values[:, :, d:]
    times = steps * _grid_dt(traj_path)

    control_path = os.path.join(args.run_dir, "control.csv")
    u = None
    if os.path.isfile(control_path):
        _, _, u = runio.read_particle_table(control_path)

    for t in args.times:
        idx = int(np.argmin(np.abs(times - t)))
        if t > times[-1] + 1e-12:
            print(f"warning: time {t:g} beyond horizon {times[-1]:g}, clamped",
                  file=sys.stderr)
        u_t = u[idx] if u is not None and idx < u.shape[0] else None
        path = os.path.join(args.run_dir, f"snapshot_t{times[idx]:g}.csv")
        runio.write_snapshot(path, int(steps[idx]), float(times[idx]),
                             x[idx], v[idx], u_t, ids)
        print(path)
    return 0


def _grid_dt(traj_path: str) -> float:
    data = np.loadtxt(traj_path, delimiter=",", skiprows=1, max_rows=2000,
                      ndmin=2)
    times = np.unique(data[:, 1])
    return float(times[1] - times[0]) if len(times) > 1 else 1.0


def cmd_presets(_args) -> int:
    for name in PRESET_NAMES:
        cfg = preset(name)
        budget = "unbounded" if math.isinf(cfg.budget) else f"{cfg.budget:g}"
        print(f"{name}: d={cfg.dim} n={cfg.n_particles} m={cfg.batch_size} "
              f"dt={cfg.dt:g} steps={cfg.n_steps} kappa={cfg.kappa:g} "
              f"alpha={cfg.alpha:g} beta={cfg.beta:g} budget={budget}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sparseflock",
                     description="Sparse mean-field control of alignment dynamics")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario")
    _add_run_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario over several betas")
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--betas", type=_parse_floats, required=True,
                         help="comma-separated penalty weights")
    p_sweep.add_argument("--parallel", action="store_true",
                         help="run the betas concurrently")
    p_sweep.set_defaults(func=cmd_sweep)

    p_snap = sub.add_parser("snapshot", help="extract phase-space states")
    p_snap.add_argument("run_dir")
    p_snap.add_argument("--times", type=_parse_floats, required=True)
    p_snap.set_defaults(func=cmd_snapshot)

    p_presets = sub.add_parser("presets", help="list built-in scenarios")
    p_presets.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except FloatingPointError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
