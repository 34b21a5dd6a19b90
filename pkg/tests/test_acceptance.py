"""Acceptance suite: one test per numbered artifact requirement.

Each test checks its requirement at the fixed tolerance and prints a
summary line with the measured margins.  Requirements 4/6 share one set of
benchmark runs and requirement 5 its reduced mean-field runs, so those are
module-scoped fixtures.  Requirement 9 is skipped unless the separately
installable figure suite is present; nothing else imports it.
"""

import dataclasses
import math
import os
import time

import numpy as np
import pytest

from sparseflock.adjoint import backward
from sparseflock.cli import main as cli_main
from sparseflock.config import ExplicitSamples, preset, rescale_particles, validate
from sparseflock.cost import count_active, grad_smooth, lyapunov
from sparseflock.dynamics import forward, sample_batches, sample_initial, zero_control
from sparseflock.optimizer import run, simulate_uncontrolled
from sparseflock.prox import project_l1_ball, prox_l1_penalty
from tests.test_config import small_scenario
from tests.test_prox import l1_projection_qp_oracle, prox_grid_oracle_2d

BUDGET_SLACK = 1e-9


def reference_instance():
    """The fixed 5-particle instance used by requirements 1 and 3."""
    rng = np.random.default_rng(42)
    cfg = validate(small_scenario(
        dim=1, n_particles=5, batch_size=3, dt=0.1, n_steps=10, kappa=1.0,
        alpha=0.01, seed=42,
        initial_distribution=ExplicitSamples(x=rng.uniform(-1, 1, (5, 1)),
                                             v=rng.uniform(-1, 1, (5, 1)))))
    initial = sample_initial(cfg.initial_distribution, cfg.n_particles, cfg.seed)
    batches = sample_batches(cfg.n_particles, cfg.batch_size, cfg.n_steps,
                             cfg.seed)
    control = rng.uniform(-1, 1, (cfg.n_steps, cfg.n_particles, cfg.dim))
    return cfg, initial, batches, control


def smooth_cost(u, initial, batches, cfg):
    traj = forward(initial, u, batches, cfg)
    v = traj.v[:cfg.n_steps]
    dev = v - v.mean(axis=1, keepdims=True)
    return cfg.dt / cfg.n_particles * (np.sum(dev * dev)
                                       + cfg.alpha * np.sum(u * u))


def test_criterion_1_gradient_matches_finite_differences():
    t0 = time.perf_counter()
    cfg, initial, batches, u = reference_instance()
    traj = forward(initial, u, batches, cfg)
    grad = grad_smooth(u, backward(traj, u, batches, cfg), cfg)

    fd = np.zeros_like(u)
    h = 1e-6
    for idx in np.ndindex(u.shape):
        up, down = u.copy(), u.copy()
        up[idx] += h
        down[idx] -= h
        fd[idx] = (smooth_cost(up, initial, batches, cfg)
                   - smooth_cost(down, initial, batches, cfg)) / (2 * h)

    rel = np.abs(grad - fd) / np.abs(fd)
    wall = time.perf_counter() - t0
    assert rel.max() <= 1e-5
    assert wall < 5.0
    print(f"criterion 1: PASS (max rel err {rel.max():.3e} <= 1e-5, "
          f"{wall:.2f}s < 5s)")


def test_criterion_2_prox_operators_match_oracles():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = 0.0
    radii = (0.5, 1.0, 3.0)
    for i in range(200):
        dim = 2 + i % 5
        radius = radii[i % 3]
        w = rng.uniform(-3, 3, dim)
        got = project_l1_ball(w, radius)
        want = l1_projection_qp_oracle(w, radius)
        worst = max(worst, float(np.max(np.abs(got - want))))
    assert worst <= 1e-10

    worst_prox = 0.0
    for threshold in (0.3, 0.05):
        for w in (np.array([0.8, -0.2]), np.array([-0.31, 0.29])):
            got = prox_l1_penalty(w, 1.0, _threshold_config(threshold))
            want = prox_grid_oracle_2d(w, threshold, grid_step=1e-4)
            worst_prox = max(worst_prox, float(np.max(np.abs(got - want))))
    wall = time.perf_counter() - t0
    assert worst_prox <= 5e-4
    assert wall < 10.0
    print(f"criterion 2: PASS (projection err {worst:.2e} <= 1e-10, "
          f"prox err {worst_prox:.2e} <= 5e-4, {wall:.2f}s < 10s)")


def _threshold_config(threshold):
    """A config whose shrinkage level beta*lam*dt/n equals ``threshold``
    when the prox is evaluated with lam = 1."""
    return validate(small_scenario(beta=threshold, dt=1.0,
                                   n_particles=1, batch_size=1))


def test_criterion_3_degenerate_splitting_equals_gradient_descent():
    cfg, initial, batches, _ = reference_instance()
    cfg = validate(dataclasses.replace(
        cfg, beta=0.0, budget=math.inf, step_size=0.1, relaxation=0.9,
        max_iters=50, tol=1e-300))
    result = run(cfg)

    u = zero_control(cfg)
    for _ in range(50):
        traj = forward(initial, u, batches, cfg)
        g = grad_smooth(u, backward(traj, u, batches, cfg), cfg)
        u = u - cfg.relaxation * cfg.step_size * g
    gap = np.max(np.abs(result.control - u))
    assert result.iterations == 50
    assert gap <= 1e-12
    print(f"criterion 3: PASS (max component gap {gap:.2e} <= 1e-12 "
          f"after 50 iterations)")


@pytest.fixture(scope="module")
def test1_runs():
    """Uncontrolled run plus three penalty levels of the 20-agent benchmark."""
    t0 = time.perf_counter()
    cfg = validate(preset("test1"))
    _, series_unc = simulate_uncontrolled(cfg)
    runs = {}
    for beta in (0.05, 0.1, 1.0):
        sub = validate(dataclasses.replace(preset("test1"), beta=beta))
        runs[beta] = run(sub)
    return {
        "config": cfg,
        "uncontrolled": series_unc,
        "runs": runs,
        "wall": time.perf_counter() - t0,
    }


def test_criterion_4_benchmark_one_reproduction(test1_runs):
    series_unc = test1_runs["uncontrolled"]
    ratio_unc = series_unc[-1] / series_unc[0]
    assert ratio_unc >= 0.1  # (a) no consensus without control

    result = test1_runs["runs"][0.1]
    v = result.final_trajectory.v
    ratio = lyapunov(v[-1]) / lyapunov(v[0])
    assert result.iterations <= 500
    assert ratio <= 1e-2  # (b) controlled consensus

    cfg = test1_runs["config"]
    total = cfg.n_steps * cfg.n_particles * cfg.dim
    inactive = {}
    terminal = {}
    for beta, res in test1_runs["runs"].items():
        inactive[beta] = total - count_active(res.feasible_control,
                                              cfg.activity_threshold)
        terminal[beta] = lyapunov(res.final_trajectory.v[-1])
    assert inactive[0.05] <= inactive[0.1] <= inactive[1.0]  # (c) parsimony
    assert terminal[0.05] <= terminal[0.1] <= terminal[1.0]  # (c) efficiency
    assert test1_runs["wall"] < 300.0
    print(f"criterion 4: PASS (uncontrolled ratio {ratio_unc:.4f} >= 0.1; "
          f"controlled ratio {ratio:.2e} <= 1e-2; "
          f"inactive {inactive[0.05]}/{inactive[0.1]}/{inactive[1.0]} "
          f"nondecreasing; V(T) {terminal[0.05]:.2e}/{terminal[0.1]:.2e}/"
          f"{terminal[1.0]:.2e} nonincreasing; {test1_runs['wall']:.0f}s < 300s)")


@pytest.fixture(scope="module")
def reduced_test2_runs():
    """Uncontrolled, sparse, and unpenalized runs of the 4000-sample scenario."""
    t0 = time.perf_counter()
    base = rescale_particles(preset("test2"), 4000)
    assert base.batch_size == 100
    cfg = validate(base)
    _, series_unc = simulate_uncontrolled(cfg)
    sparse = run(cfg)
    full = run(validate(dataclasses.replace(base, beta=0.0, budget=math.inf)))
    return {
        "config": cfg,
        "uncontrolled": series_unc,
        "sparse": sparse,
        "full": full,
        "wall": time.perf_counter() - t0,
    }


def test_criterion_5_mean_field_scale_trend(reduced_test2_runs):
    cfg = reduced_test2_runs["config"]
    v_unc = reduced_test2_runs["uncontrolled"][-1]
    v_sparse = lyapunov(reduced_test2_runs["sparse"].final_trajectory.v[-1])
    v_full = lyapunov(reduced_test2_runs["full"].final_trajectory.v[-1])

    total = cfg.n_steps * cfg.n_particles * cfg.dim
    inactive_sparse = (total - count_active(
        reduced_test2_runs["sparse"].feasible_control,
        cfg.activity_threshold)) / total
    inactive_full = (total - count_active(
        reduced_test2_runs["full"].feasible_control,
        cfg.activity_threshold)) / total

    assert v_full < v_sparse < v_unc
    assert v_sparse <= 1e-2 * v_unc
    assert inactive_sparse >= 0.5
    assert inactive_full <= 0.05
    assert reduced_test2_runs["wall"] < 1800.0
    print(f"criterion 5: PASS (V_full {v_full:.2e} < V_sparse {v_sparse:.2e} "
          f"< V_unc {v_unc:.2e}; V_sparse/V_unc {v_sparse / v_unc:.2e} <= 1e-2; "
          f"inactive sparse {inactive_sparse:.3f} >= 0.5, "
          f"full {inactive_full:.3f} <= 0.05; "
          f"{reduced_test2_runs['wall']:.0f}s < 1800s)")


def test_criterion_6_budget_feasible_every_iteration(test1_runs):
    budget = test1_runs["config"].budget
    assert budget == 120.0
    worst = 0.0
    for res in test1_runs["runs"].values():
        for row in res.history:
            worst = max(worst, row.budget_used)
            assert row.budget_used <= budget * (1 + BUDGET_SLACK)
    print(f"criterion 6: PASS (max l1 use {worst:.4f} <= "
          f"{budget} * (1 + 1e-9) across all iterations)")


def test_criterion_7_reruns_are_byte_identical(tmp_path):
    argv = ["run", "--scenario", "test1", "--beta", "0.1", "--seed", "7"]
    assert cli_main(argv + ["--outdir", str(tmp_path / "a")]) == 0
    assert cli_main(argv + ["--outdir", str(tmp_path / "b")]) == 0
    body_a = (tmp_path / "a" / "metrics.csv").read_bytes()
    body_b = (tmp_path / "b" / "metrics.csv").read_bytes()
    assert body_a == body_b
    print(f"criterion 7: PASS (metrics.csv bodies identical, "
          f"{len(body_a)} bytes)")


def test_criterion_8_full_batch_conserves_mean_velocity():
    cfg = validate(dataclasses.replace(preset("test1"), batch_size=20))
    assert cfg.n_steps == 75
    initial = sample_initial(cfg.initial_distribution, cfg.n_particles, cfg.seed)
    batches = sample_batches(cfg.n_particles, cfg.n_particles, cfg.n_steps,
                             cfg.seed)
    traj = forward(initial, zero_control(cfg), batches, cfg)
    means = traj.v.mean(axis=1)
    drift = np.max(np.abs(means - means[0]))
    assert drift <= 1e-12
    print(f"criterion 8: PASS (mean-velocity drift {drift:.2e} <= 1e-12 "
          f"over 75 steps)")


def test_criterion_9_figure_suite_renders(tmp_path):
    figsuite = pytest.importorskip("figsuite")

    sweep_dir = tmp_path / "sweep"
    assert cli_main(["sweep", "--scenario", "test1", "--betas", "0.05,0.1",
                     "--outdir", str(sweep_dir), "--dump-trajectory"]) == 0
    images = figsuite.render_all(str(sweep_dir))
    names = sorted(os.path.basename(p) for p in images)
    assert names == ["activation_beta_0.05.png", "activation_beta_0.1.png",
                     "lyapunov.png", "trajectories.png"]
    for path in images:
        assert os.path.getsize(path) > 0

    run_dir = tmp_path / "t3"
    assert cli_main(["run", "--scenario", "test3", "--n-particles", "400",
                     "--step-size", "2", "--max-iters", "30",
                     "--outdir", str(run_dir)]) == 0
    snapshots = figsuite.render_all(str(run_dir))
    snap_names = [os.path.basename(p) for p in snapshots]
    assert any("t0.8" in name for name in snap_names)
    for path in snapshots:
        assert os.path.getsize(path) > 0
    print(f"criterion 9: PASS (sweep panels {names}; "
          f"run snapshots {snap_names})")
