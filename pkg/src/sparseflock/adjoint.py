"""Backward multiplier sweep for the random-batch alignment scheme.

The multipliers (p, q) attached to positions and velocities are propagated
from zero terminal data down to step 0 as the exact transpose of the
linearization of the implemented forward step.  With that convention the
gradient of the smooth cost with respect to the control on [t_n, t_{n+1})
is (dt/n) * (2*alpha*u^n + q^{n+1}) componentwise, which finite differences
of cost-of-forward confirm to rounding accuracy.

Because each step's interaction subsample is shared by all particles, the
transpose splits into a gather phase (every particle accumulates over the
batch it interacted with) and a scatter phase (each batch member collects the
sensitivity of every particle that touched it).  Writing s = |x_l - x_b|^2,
w = (1+s)^(-kappa), g = dw/ds = -kappa*(1+s)^(-kappa-1), and A_lb =
<v_b - v_l, q_l^{n+1}>, the per-step update is

    p_l^n = p_l^{n+1} + (2*dt/m) * sum_b g_lb * A_lb * (x_l - x_b)      [gather]
    p_b^n += -(2*dt/m) * sum_l g_lb * A_lb * (x_l - x_b)                [scatter]

    q_l^n = q_l^{n+1} + dt*p_l^{n+1} + 2*dt*(v_l - vbar^n)
            - (dt/m) * (sum_b w_lb - [l in batch]) * q_l^{n+1}          [gather]
    q_b^n += (dt/m) * (sum_l w_lb * q_l^{n+1} - q_b^{n+1})              [scatter]

Self terms ([l in batch] and the -q_b correction) remove the vacuous
interaction of a particle with itself (w at zero distance is exactly 1).
The mean-velocity running cost needs no extra correction because the spread
sum's gradient with respect to v_l is exactly 2*(v_l - vbar).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sparseflock.config import ValidatedConfig
from sparseflock.dynamics import BatchSchedule, Trajectory, _chunk_rows


@dataclass
class AdjointTrajectory:
    """Multipliers p (positions) and q (velocities), shape (n_steps+1, n, d)."""

    p: np.ndarray
    q: np.ndarray


def _step_back(x, v, q_next, idx, kappa, dt):
    """One transposed interaction step; returns (p increment, q update pieces).

    Returns (gp, sp, coef, sq): per-particle gather term for p, per-batch-slot
    scatter for p, kernel-weight row sums (self-corrected) for the q gather,
    and per-batch-slot scatter sums for q.
    """
    n, d = x.shape
    m = idx.shape[0]
    xb, vb = x[idx], v[idx]
    gp = np.empty_like(x)
    sp = np.zeros((m, d))
    sq = np.zeros((m, d))
    coef = np.empty(n)
    rows = _chunk_rows(n, m, d)
    for lo in range(0, n, rows):
        hi = min(n, lo + rows)
        diff = x[lo:hi, None, :] - xb[None, :, :]
        s = np.sum(diff * diff, axis=2)
        w = (1.0 + s) ** (-kappa)
        g = -kappa * (1.0 + s) ** (-kappa - 1.0)
        qr = q_next[lo:hi]
        a = qr @ vb.T - np.sum(v[lo:hi] * qr, axis=1)[:, None]
        wa = g * a
        gp[lo:hi] = (2.0 * dt / m) * np.einsum("rb,rbd->rd", wa, diff)
        sp += np.einsum("rb,rbd->bd", wa, diff)
        sq += w.T @ qr
        coef[lo:hi] = w.sum(axis=1) - np.sum(
            idx[None, :] == np.arange(lo, hi)[:, None], axis=1)
    return gp, -(2.0 * dt / m) * sp, coef, sq


def backward(traj: Trajectory, control: np.ndarray, batches: BatchSchedule,
             config: ValidatedConfig, terminal=None,
             running_cost: bool = True) -> AdjointTrajectory:
    """Propagate the multipliers from step n_steps down to 0.

    The schedule must be the one the trajectory was generated with; otherwise
    the result is not the transpose of anything that was evaluated.  The
    control argument is shape-checked only (the dynamics are linear in u).

    ``terminal`` optionally injects nonzero terminal data (p_T, q_T) and
    ``running_cost=False`` drops the velocity-spread source term; both exist
    for linearity checks in tests.
    """
    n, d, nt = config.n_particles, config.dim, config.n_steps
    if traj.x.shape != (nt + 1, n, d):
        raise ValueError(f"trajectory shape {traj.x.shape} != {(nt + 1, n, d)}")
    if control.shape != (nt, n, d):
        raise ValueError(f"control shape {control.shape} != {(nt, n, d)}")
    if batches.n_steps != nt:
        raise ValueError(
            f"batch schedule covers {batches.n_steps} steps, trajectory has {nt}")

    dt, m = config.dt, config.batch_size
    p = np.zeros((nt + 1, n, d))
    q = np.zeros((nt + 1, n, d))
    if terminal is not None:
        p[nt], q[nt] = terminal
    for step in range(nt - 1, -1, -1):
        x, v = traj.x[step], traj.v[step]
        idx = batches.indices[step]
        gp, sp, coef, sq = _step_back(x, v, q[step + 1], idx, config.kappa, dt)

        p[step] = p[step + 1] + gp
        np.add.at(p[step], idx, sp)

        q[step] = (q[step + 1] + dt * p[step + 1]
                   - (dt / m) * coef[:, None] * q[step + 1])
        if running_cost:
            q[step] += 2.0 * dt * (v - v.mean(axis=0))
        np.add.at(q[step], idx, (dt / m) * (sq - q[step + 1][idx]))
    return AdjointTrajectory(p=p, q=q)
