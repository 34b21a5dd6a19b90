"""Synthetic run/sweep directories shared by the figsuite tests."""

from __future__ import annotations

import math
import os

import pytest


def write_csv(path, header, rows):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def _lyapunov_rows(n_steps, dt, rate):
    return [(n, n * dt, math.exp(-0.4 * n * dt), math.exp(-rate * n * dt))
            for n in range(n_steps + 1)]


def _trajectory_rows(n_steps, dt, n_particles, shift=0.0):
    rows = []
    for n in range(n_steps + 1):
        for i in range(n_particles):
            rows.append((n, n * dt, i,
                         0.3 * i + shift + 0.05 * n, 1.0 - 0.1 * i))
    return rows


def _control_rows(n_steps, dt, n_particles):
    rows = []
    for n in range(n_steps):
        for i in range(n_particles):
            u = 0.5 if (i + n) % 2 == 0 else 0.0
            rows.append((n, n * dt, i, u))
    return rows


def _hist_rows(n_steps, dt, n_bins, weight):
    rows = []
    for n in range(n_steps):
        for b in range(n_bins):
            rows.append((n, n * dt, -1.0 + 0.5 * b, -0.5 + 0.5 * b,
                         weight / n_bins))
    return rows


def populate_run_dir(root, n_steps=5, dt=0.1, n_particles=3,
                     trajectories=True, histograms=True):
    write_csv(os.path.join(root, "lyapunov.csv"),
              ["step", "time", "V_uncontrolled", "V_controlled"],
              _lyapunov_rows(n_steps, dt, rate=2.0))
    write_csv(os.path.join(root, "control.csv"),
              ["step", "time", "particle_id", "u_1"],
              _control_rows(n_steps, dt, n_particles))
    write_csv(os.path.join(root, "control_activity.csv"),
              ["step", "active_count"],
              [(n, (n_particles + n) % (n_particles + 1)) for n in range(n_steps)])
    if trajectories:
        write_csv(os.path.join(root, "trajectory_controlled.csv"),
                  ["step", "time", "particle_id", "x_1", "v_1"],
                  _trajectory_rows(n_steps, dt, n_particles))
        write_csv(os.path.join(root, "trajectory_uncontrolled.csv"),
                  ["step", "time", "particle_id", "x_1", "v_1"],
                  _trajectory_rows(n_steps, dt, n_particles, shift=0.2))
    if histograms:
        for name, col in (("hist_x.csv", "mass"), ("hist_v.csv", "mass"),
                          ("hist_u_by_x.csv", "weight"),
                          ("hist_u_by_v.csv", "weight")):
            write_csv(os.path.join(root, name),
                      ["step", "time", "bin_lo", "bin_hi", col],
                      _hist_rows(n_steps, dt, 4, 1.0))
    return root


def marginal2d_rows(step, time, n1, n2):
    rows = []
    for a in range(n1):
        for b in range(n2):
            mass = 1.0 / (n1 * n2)
            rows.append((step, time, -1.0 + a, a, -2.0 + b, b - 1.0, mass,
                         0.1 * a, -0.1 * b, 0.01 * (a + b), 0.0))
    return rows


MARGINAL2D_HEADER = ["step", "time", "x1_lo", "x1_hi", "x2_lo", "x2_hi",
                     "mass", "mean_v1", "mean_v2", "mean_u1", "mean_u2"]


@pytest.fixture
def run_dir(tmp_path):
    return populate_run_dir(str(tmp_path / "run"))


@pytest.fixture
def run2d_dir(tmp_path):
    root = str(tmp_path / "run2d")
    write_csv(os.path.join(root, "lyapunov.csv"),
              ["step", "time", "V_uncontrolled", "V_controlled"],
              _lyapunov_rows(8, 0.1, rate=3.0))
    rows = []
    for n in range(9):
        for i in range(4):
            rows.append((n, 0.1 * n, i, 0.5 if i % 2 else 0.0,
                         -0.25 if n % 2 else 0.0))
    write_csv(os.path.join(root, "control.csv"),
              ["step", "time", "particle_id", "u_1", "u_2"], rows[:32])
    rows = []
    for n in range(9):
        for i in range(4):
            rows.append((n, 0.1 * n, i, math.cos(0.3 * i) + 0.05 * n,
                         math.sin(0.3 * i), 0.2 * i, -0.1 * i))
    write_csv(os.path.join(root, "trajectory_controlled.csv"),
              ["step", "time", "particle_id", "x_1", "x_2", "v_1", "v_2"],
              rows)
    for step, time in ((0, 0.0), (8, 0.8)):
        write_csv(os.path.join(root, f"marginal2d_t{time:g}.csv"),
                  MARGINAL2D_HEADER, marginal2d_rows(step, time, 3, 4))
    return root


@pytest.fixture
def sweep_dir(tmp_path):
    root = str(tmp_path / "sweep")
    write_csv(os.path.join(root, "sweep_summary.csv"),
              ["beta", "v_terminal", "inactive_components", "iterations",
               "j1", "j2"],
              [(0.05, 1e-8, 10, 40, 0.1, 0.01), (0.1, 2e-8, 14, 38, 0.1, 0.02)])
    for i, beta in enumerate(("0.05", "0.1")):
        sub = os.path.join(root, f"beta_{beta}")
        write_csv(os.path.join(sub, "lyapunov.csv"),
                  ["step", "time", "V_uncontrolled", "V_controlled"],
                  _lyapunov_rows(5, 0.1, rate=2.0 + i))
        write_csv(os.path.join(sub, "control.csv"),
                  ["step", "time", "particle_id", "u_1"],
                  _control_rows(5, 0.1, 3))
        write_csv(os.path.join(sub, "control_activity.csv"),
                  ["step", "active_count"], [(n, n % 3) for n in range(5)])
    write_csv(os.path.join(root, "beta_0.05", "trajectory_controlled.csv"),
              ["step", "time", "particle_id", "x_1", "v_1"],
              _trajectory_rows(5, 0.1, 3))
    write_csv(os.path.join(root, "beta_0.05", "trajectory_uncontrolled.csv"),
              ["step", "time", "particle_id", "x_1", "v_1"],
              _trajectory_rows(5, 0.1, 3, shift=0.2))
    return root
