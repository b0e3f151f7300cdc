"""Maximum modulus of F on a skeleton, computed in log space."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .functions import EntireFunction
from .polydisc import GridSpec, as_point, as_radius, skeleton_angles, skeleton_samples


@dataclass
class MaxModulus:
    log_value: float  # ln max |F| over the sampled and refined skeleton
    angles: np.ndarray  # maximizing angle tuple
    refinement_delta: float  # gain of ln M in the final refinement pass

    @property
    def value(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_value))


def log_max_modulus(
    f: EntireFunction, R, grid: GridSpec = GridSpec(), center=None
) -> MaxModulus:
    """``ln max{|F(z)| : z in T^n(center, R)}`` by grid search plus local refinement.

    Each refinement pass probes the ``3^n`` neighbours of the incumbent at
    half the previous angular step.  The result is a lower bound of the true
    maximum (it is attained at a sampled point).
    """
    n = f.arity
    R = as_radius(R, n)
    center = np.zeros(n, dtype=complex) if center is None else as_point(center, n)
    logs = f.log_abs(skeleton_samples(center, R, grid))
    k = int(np.argmax(logs))
    best = float(logs[k])
    theta = skeleton_angles(n, grid)[k].copy()
    active = R > 0
    if not np.isfinite(best) or not active.any():
        return MaxModulus(best, theta, 0.0)
    offsets = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n)))
    offsets[:, ~active] = 0.0
    h = np.pi / grid.angular_resolution
    delta = 0.0
    for _ in range(grid.refinement_depth):
        cand = theta[None, :] + h * offsets
        vals = f.log_abs(center[None, :] + R[None, :] * np.exp(1j * cand))
        i = int(np.argmax(vals))
        delta = max(0.0, float(vals[i]) - best)
        if vals[i] > best:
            best, theta = float(vals[i]), cand[i]
        h /= 2
    return MaxModulus(best, np.mod(theta, 2 * np.pi), delta)


def max_modulus(f: EntireFunction, R, grid: GridSpec = GridSpec()) -> float:
    """``M(F, R)``; may be ``inf`` when it exceeds float range (use the log form)."""
    return log_max_modulus(f, R, grid).value
