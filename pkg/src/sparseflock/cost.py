"""Discrete cost functional, its smooth gradient, and run diagnostics.

The cost splits into a smooth part (velocity spread around the per-step mean
plus the quadratic control penalty), a scaled l1 penalty, and the hard budget
constraint handled as a feasibility flag:

    j1 = (dt/n) * sum_{step, i} ( |vbar^step - v_i^step|^2 + alpha*|u_i^step|^2 )
    j2 = (dt/n) * beta * |u|_1
    feasible:  |u|_1 <= budget  (up to 1e-9 relative slack for projected iterates)

The mean velocity in the running cost is recomputed at every step.  The spread
is summed over steps 0..n_steps-1, matching the intervals the control acts on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sparseflock.adjoint import AdjointTrajectory
from sparseflock.config import ValidatedConfig
from sparseflock.dynamics import Trajectory

#: Relative slack when testing the budget: exact projections land on the
#: boundary up to rounding, which must not flip feasibility.
BUDGET_SLACK = 1e-9


@dataclass
class CostBreakdown:
    """Cost components at one control: smooth j1, l1 penalty j2, budget flag."""

    j1: float
    j2: float
    feasible: bool
    total: float  # j1 + j2 when feasible, +inf otherwise


@dataclass
class DiagnosticsRow:
    """One optimizer iteration, evaluated at the budget-feasible iterate."""

    iteration: int
    j1: float
    j2: float
    residual: float
    active_components: int
    budget_used: float  # |u|_1
    lyapunov_terminal: float

    FIELDS = ("iteration", "j1", "j2", "residual", "active_components",
              "budget_used", "lyapunov_terminal")

    def as_tuple(self):
        return (self.iteration, self.j1, self.j2, self.residual,
                self.active_components, self.budget_used, self.lyapunov_terminal)


def evaluate(traj: Trajectory, control: np.ndarray,
             config: ValidatedConfig) -> CostBreakdown:
    """Cost breakdown for a trajectory/control pair."""
    nt, n, d = config.n_steps, config.n_particles, config.dim
    if traj.v.shape != (nt + 1, n, d) or control.shape != (nt, n, d):
        raise ValueError(
            f"shapes {traj.v.shape}, {control.shape} inconsistent with config "
            f"({nt} steps, {n} particles, dim {d})")
    v = traj.v[:nt]
    spread = v - v.mean(axis=1, keepdims=True)
    j1 = (config.dt / n) * (np.sum(spread * spread)
                            + config.alpha * np.sum(control * control))
    l1 = float(np.sum(np.abs(control)))
    j2 = (config.dt / n) * config.beta * l1
    feasible = l1 <= config.budget * (1.0 + BUDGET_SLACK)
    return CostBreakdown(j1=float(j1), j2=float(j2), feasible=feasible,
                         total=float(j1 + j2) if feasible else math.inf)


def grad_smooth(control: np.ndarray, adjoint: AdjointTrajectory,
                config: ValidatedConfig) -> np.ndarray:
    """Gradient of the smooth cost: (dt/n) * (2*alpha*u^step + q^{step+1}).

    The adjoint must come from the trajectory this control generated, with the
    same batch schedule.
    """
    nt, n, d = config.n_steps, config.n_particles, config.dim
    if control.shape != (nt, n, d) or adjoint.q.shape != (nt + 1, n, d):
        raise ValueError(
            f"shapes {control.shape}, {adjoint.q.shape} inconsistent with config")
    return (config.dt / n) * (2.0 * config.alpha * control + adjoint.q[1:])


def lyapunov(velocities: np.ndarray) -> float:
    """Velocity-spread functional: mean squared deviation from the ensemble mean.

    Equals the all-pairs form sum_{i,j} |v_i - v_j|^2 / (2 n^2); zero exactly
    at consensus, invariant under adding one vector to every velocity.
    """
    v = np.asarray(velocities, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    dev = v - v.mean(axis=0)
    return float(np.sum(dev * dev) / v.shape[0])


def count_active(control: np.ndarray, threshold: float) -> int:
    """Number of scalar control components with |u| strictly above threshold."""
    return int(np.count_nonzero(np.abs(control) > threshold))
