"""Sparse control of alignment (Cucker-Smale) dynamics at particle and mean-field scale.

The package solves budget- and sparsity-constrained consensus control problems:
a random-batch particle discretization of the alignment dynamics, a discrete
adjoint pass for the smooth cost gradient, and a Davis-Yin three-operator
splitting loop combining a gradient step, soft-thresholding, and exact
projection onto an l1 ball.
"""

from sparseflock.config import (
    ConfigError,
    ExplicitSamples,
    GaussianMixture1D,
    ScenarioConfig,
    TwoDisc2D,
    ValidatedConfig,
    load_config,
    preset,
    save_config,
    validate,
)
from sparseflock.dynamics import (
    BatchSchedule,
    ParticleState,
    Trajectory,
    forward,
    kernel,
    kernel_gradient,
    sample_batches,
    sample_initial,
)
from sparseflock.adjoint import AdjointTrajectory, backward
from sparseflock.cost import (
    CostBreakdown,
    DiagnosticsRow,
    count_active,
    evaluate,
    grad_smooth,
    lyapunov,
)
from sparseflock.prox import project_l1_ball, prox_l1_penalty, soft_threshold
from sparseflock.optimizer import (
    OptimizationResult,
    run,
    simulate_uncontrolled,
    tos_step,
)

__version__ = "0.1.0"

__all__ = [
    "AdjointTrajectory",
    "BatchSchedule",
    "ConfigError",
    "CostBreakdown",
    "DiagnosticsRow",
    "ExplicitSamples",
    "GaussianMixture1D",
    "OptimizationResult",
    "ParticleState",
    "ScenarioConfig",
    "Trajectory",
    "TwoDisc2D",
    "ValidatedConfig",
    "backward",
    "count_active",
    "evaluate",
    "forward",
    "grad_smooth",
    "kernel",
    "kernel_gradient",
    "load_config",
    "lyapunov",
    "preset",
    "project_l1_ball",
    "prox_l1_penalty",
    "run",
    "sample_batches",
    "sample_initial",
    "save_config",
    "simulate_uncontrolled",
    "soft_threshold",
    "tos_step",
    "validate",
]
