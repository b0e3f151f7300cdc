"""Composite Simpson rules used by the growth and weight modules."""
from __future__ import annotations

from typing import Callable

import numpy as np


class IntegrationError(ArithmeticError):
    pass


def simpson_weights(panels: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of composite Simpson with an even number of panels."""
    if panels < 2 or panels % 2:
        raise ValueError("Simpson needs an even number of panels >= 2")
    t = np.linspace(a, b, panels + 1)
    w = np.ones(panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return t, w * (b - a) / (3.0 * panels)


def simpson(values: np.ndarray, a: float, b: float, axis: int = -1) -> np.ndarray:
    """Composite Simpson of samples on a uniform grid (odd sample count)."""
    values = np.moveaxis(np.asarray(values), axis, -1)
    _, w = simpson_weights(values.shape[-1] - 1, a, b)
    return values @ w


def adaptive_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    rtol: float = 1e-6,
    atol: float = 1e-12,
    min_panels: int = 8,
    max_panels: int = 2**16,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched composite Simpson with panel doubling until every entry converges.

    ``f`` maps an array of nodes ``t`` (shape ``(p,)``) to values of shape
    ``(..., p)``; the whole batch shares one node set.  Returns the integral
    and the last refinement difference, both of shape ``(...)``.  Previously
    computed samples are reused at each doubling.
    """
    if b == a:
        probe = np.asarray(f(np.array([a])))
        zero = np.zeros(probe.shape[:-1])
        return zero, zero
    panels = min_panels
    t = np.linspace(a, b, panels + 1)
    vals = np.asarray(f(t), dtype=float)
    previous = simpson(vals, a, b)
    while True:
        panels *= 2
        if panels > max_panels:
            raise IntegrationError(
                f"Simpson rule did not reach rtol={rtol} with {max_panels} panels on [{a}, {b}]"
            )
        t_new = a + (b - a) * (np.arange(panels // 2) * 2 + 1) / panels
        new_vals = np.asarray(f(t_new), dtype=float)
        merged = np.empty(vals.shape[:-1] + (panels + 1,))
        merged[..., ::2] = vals
        merged[..., 1::2] = new_vals
        vals = merged
        current = simpson(vals, a, b)
        diff = np.abs(current - previous)
        if not np.all(np.isfinite(current)):
            raise IntegrationError("non-finite integrand values")
        if np.all(diff <= rtol * np.abs(current) + atol):
            return current, diff
        previous = current
