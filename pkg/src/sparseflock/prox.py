"""Closed-form proximal maps: soft-thresholding and exact l1-ball projection.

Both operators act componentwise on the flattened control vector (canonical
layout: time step major, then particle, then axis).  They are separable, so
the flattening order never affects the values.

The projection finds the exact shrinkage level by sorting the magnitudes and
scanning the breakpoints of the piecewise-linear l1 mass (Duchi et al. 2008
style), so no iteration tolerance is involved and projecting twice equals
projecting once.
"""

from __future__ import annotations

import math

import numpy as np

from sparseflock.config import ValidatedConfig


def soft_threshold(w: np.ndarray, h: float) -> np.ndarray:
    """Componentwise shrinkage sign(w) * max(|w| - h, 0) for h >= 0."""
    if h < 0:
        raise ValueError(f"threshold must be >= 0 (h={h})")
    w = np.asarray(w, dtype=float)
    return np.sign(w) * np.maximum(np.abs(w) - h, 0.0)


def prox_l1_penalty(w: np.ndarray, step: float, config: ValidatedConfig) -> np.ndarray:
    """Prox of the scaled l1 penalty: shrinkage at beta * step * dt / n_particles."""
    return soft_threshold(w, config.beta * step * config.dt / config.n_particles)


def project_l1_ball(w: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto { z : |z|_1 <= radius }.

    Feasible inputs (including an infinite radius) are returned unchanged.
    Otherwise the result is soft_threshold(w, t) at the exact root t > 0 of
    the decreasing piecewise-linear map t -> |S_t(w)|_1 - radius: with the
    magnitudes sorted in descending order a_1 >= ... >= a_m and partial sums
    c_r, the mass on [a_{r+1}, a_r] is c_r - r*t, so the root is
    (c_r - radius)/r for the largest r with a_r > (c_r - radius)/r.
    Components tied at the breakpoint shrink symmetrically; no tie-breaking
    is needed.
    """
    if not radius > 0:
        raise ValueError(f"radius must be > 0 (radius={radius})")
    w = np.asarray(w, dtype=float)
    mag = np.abs(w)
    if math.isinf(radius) or mag.sum() <= radius:
        return w.copy()
    a = np.sort(mag.ravel())[::-1]
    cumsum = np.cumsum(a)
    ranks = np.arange(1, a.size + 1)
    candidates = (cumsum - radius) / ranks
    r = np.nonzero(a > candidates)[0][-1]
    return soft_threshold(w, candidates[r])
