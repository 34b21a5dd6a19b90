"""Communication kernel, initial sampling, random batches, and the forward scheme.

The population of ``n`` particles with positions ``x`` and velocities ``v``
(arrays of shape (n, d)) evolves by an explicit Euler step: positions advance
with the current velocity, velocities relax toward the velocities of a random
subsample of ``m`` interaction partners, weighted by the radial kernel
P(r) = (1 + r^2)^(-kappa), plus the control acting on that interval.

One subsample per time step is shared by all particles, which keeps the cost
of a step at O(n*m) and makes the adjoint transpose a fixed gather/scatter
pattern.  A particle may draw itself; the self term vanishes (v_i - v_i = 0),
so no exclusion logic is needed.

Randomness comes from the counter-based Philox generator, keyed by the
scenario seed with fixed per-purpose stream ids, so initial samples and batch
schedules are reproducible independently of each other and of any threading.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sparseflock.config import (
    ExplicitSamples,
    GaussianMixture1D,
    TwoDisc2D,
    ValidatedConfig,
)

# Philox stream ids: keep initial sampling and batch schedules decoupled.
_STREAM_INITIAL = 50
_STREAM_BATCHES = 2

# Upper bound on elements of the per-chunk (rows x batch x dim) temporaries.
_CHUNK_ELEMS = 1 << 22


def _rng(seed: int, stream: tuple[int, ...]) -> np.random.Generator:
    """Deterministic generator for (seed, stream), independent of call order."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=stream)))


@dataclass
class ParticleState:
    """Positions and velocities, each of shape (n_particles, dim)."""

    x: np.ndarray
    v: np.ndarray


@dataclass
class Trajectory:
    """States on the full time grid: x, v of shape (n_steps+1, n_particles, dim)."""

    x: np.ndarray
    v: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.x.shape[0] - 1


@dataclass
class BatchSchedule:
    """Interaction subsamples: one row of particle indices per time step.

    indices has shape (n_steps, batch_size); each row is drawn without
    replacement from {0..n_particles-1} and is shared by all particles at
    that step.
    """

    indices: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.indices.shape[0]


def kernel(r_squared, kappa: float):
    """Radial interaction weight (1 + r^2)^(-kappa), in (0, 1].

    Parameterized by the squared distance so that every derivative is taken
    through the smooth map x -> (1 + |x|^2)^(-kappa) and nothing divides by r.
    """
    return (1.0 + np.asarray(r_squared, dtype=float)) ** (-kappa)


def kernel_gradient(diff, kappa: float):
    """Gradient of P(|diff|) with respect to the first argument of diff = x_i - x_j.

    Equals -2*kappa*(1 + |diff|^2)^(-kappa-1) * diff; smooth at diff = 0.
    """
    diff = np.asarray(diff, dtype=float)
    s = np.sum(diff * diff, axis=-1, keepdims=True)
    return -2.0 * kappa * (1.0 + s) ** (-kappa - 1.0) * diff


def sample_initial(spec, n_particles: int, seed: int) -> ParticleState:
    """Draw the initial particle ensemble for a distribution spec.

    Mixture clusters are filled round-robin (sizes equal up to remainder);
    disc positions use the polar method with the area-correct sqrt radius law.
    """
    rng = _rng(seed, (_STREAM_INITIAL,))
    if isinstance(spec, GaussianMixture1D):
        centers = np.asarray(spec.centers, dtype=float)  # (k, 2)
        assign = np.arange(n_particles) % len(centers)
        x = centers[assign, 0, None] + spec.sigma_x * rng.standard_normal((n_particles, 1))
        v = centers[assign, 1, None] + spec.sigma_v * rng.standard_normal((n_particles, 1))
        return ParticleState(x=x, v=v)
    if isinstance(spec, TwoDisc2D):
        centers = np.asarray(spec.centers, dtype=float)  # (2, 2)
        dirs = np.asarray(spec.velocity_directions, dtype=float)
        assign = np.arange(n_particles) % 2
        radius = spec.disc_radius * np.sqrt(rng.random(n_particles))
        angle = 2.0 * np.pi * rng.random(n_particles)
        offset = radius[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])
        x = centers[assign] + offset
        speed = np.sum(x * x, axis=1) / spec.disc_radius**2
        v = speed[:, None] * dirs[assign]
        v = v + spec.velocity_noise_sigma * rng.standard_normal((n_particles, 2))
        return ParticleState(x=x, v=v)
    if isinstance(spec, ExplicitSamples):
        if spec.path is not None:
            data = np.loadtxt(spec.path, delimiter=",", skiprows=1, ndmin=2)
            d = data.shape[1] // 2
            x, v = data[:, :d], data[:, d:]
        else:
            x = np.asarray(spec.x, dtype=float)
            v = np.asarray(spec.v, dtype=float)
        if x.ndim == 1:
            x, v = x[:, None], v[:, None]
        if x.shape[0] != n_particles:
            raise ValueError(
                f"explicit samples hold {x.shape[0]} particles, expected {n_particles}")
        return ParticleState(x=x.copy(), v=v.copy())
    raise TypeError(f"unknown initial distribution ({type(spec).__name__})")


def sample_batches(n_particles: int, batch_size: int, n_steps: int, seed: int,
                   draw: int = 0) -> BatchSchedule:
    """Draw the interaction subsample for every time step, without replacement.

    ``draw`` selects an independent schedule from the same seed (used when the
    optimizer re-draws batches per iteration; 0 is the frozen default).
    """
    if batch_size > n_particles:
        raise ValueError(
            f"batch_size exceeds n_particles ({batch_size} > {n_particles})")
    rng = _rng(seed, (_STREAM_BATCHES, draw))
    keys = rng.random((n_steps, n_particles))
    indices = np.argpartition(keys, batch_size - 1, axis=1)[:, :batch_size]
    return BatchSchedule(indices=np.ascontiguousarray(indices))


def _chunk_rows(n: int, batch_size: int, dim: int) -> int:
    return max(1, min(n, _CHUNK_ELEMS // max(1, batch_size * dim)))


def _interaction(x: np.ndarray, v: np.ndarray, idx: np.ndarray,
                 kappa: float) -> np.ndarray:
    """Mean kernel-weighted velocity pull (1/m) sum_k P(|x_i-x_jk|)(v_jk - v_i)."""
    n, d = x.shape
    m = idx.shape[0]
    xb, vb = x[idx], v[idx]
    out = np.empty_like(v)
    step = _chunk_rows(n, m, d)
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        diff = x[lo:hi, None, :] - xb[None, :, :]
        w = (1.0 + np.sum(diff * diff, axis=2)) ** (-kappa)  # (rows, m)
        out[lo:hi] = (w @ vb - w.sum(axis=1, keepdims=True) * v[lo:hi]) / m
    return out


def forward(initial: ParticleState, control: np.ndarray, batches: BatchSchedule,
            config: ValidatedConfig) -> Trajectory:
    """Run the explicit Euler particle scheme under a control field.

    control has shape (n_steps, n_particles, dim) with u[n] acting on
    [t_n, t_{n+1}).  Both updates use the state at step n: positions advance
    with v^n, and the interaction is evaluated at (x^n, v^n).

    Raises FloatingPointError naming the step at which a non-finite state
    first appears.
    """
    n, d = config.n_particles, config.dim
    nt = config.n_steps
    if control.shape != (nt, n, d):
        raise ValueError(f"control shape {control.shape} != {(nt, n, d)}")
    if batches.n_steps != nt:
        raise ValueError(f"batch schedule covers {batches.n_steps} steps, expected {nt}")
    x = np.empty((nt + 1, n, d))
    v = np.empty((nt + 1, n, d))
    x[0], v[0] = initial.x, initial.v
    dt = config.dt
    for step in range(nt):
        pull = _interaction(x[step], v[step], batches.indices[step], config.kappa)
        x[step + 1] = x[step] + dt * v[step]
        v[step + 1] = v[step] + dt * control[step] + dt * pull
        if not (np.isfinite(x[step + 1]).all() and np.isfinite(v[step + 1]).all()):
            raise FloatingPointError(f"non-finite state at step {step + 1}")
    return Trajectory(x=x, v=v)


def zero_control(config: ValidatedConfig) -> np.ndarray:
    """The all-zero control field with the canonical (step, particle, axis) layout."""
    return np.zeros((config.n_steps, config.n_particles, config.dim))
