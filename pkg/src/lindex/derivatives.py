"""Mixed partial derivatives ``F^{(K)}`` by two independent routes.

* symbolic: repeated :func:`~lindex.expr.symbolic_partial`, cached per ``K``;
* Cauchy: product trapezoid rule on the torus ``T^n(z0, rho)``.  One FFT of
  the samples yields every Taylor coefficient ``F^{(K)}(z0) rho^K / K!`` at
  once, up to aliasing by terms of order ``K + m``.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .expr import Node, evaluate, log_abs, symbolic_partial
from .functions import EntireFunction, WeightVector
from .polydisc import GridSpec, MultiIndex, as_point, as_radius, skeleton_samples


class QuadratureError(ArithmeticError):
    pass


class DerivativeTable:
    """Symbolic derivative trees of one function, built lazily and cached."""

    def __init__(self, f: EntireFunction):
        self.f = f
        self._cache: dict[tuple[int, ...], Node] = {(0,) * f.arity: f.ast}

    def __getitem__(self, K) -> Node:
        key = tuple(MultiIndex(tuple(K)).entries)
        if len(key) != self.f.arity:
            raise ValueError(f"multi-index {key} does not match arity {self.f.arity}")
        node = self._cache.get(key)
        if node is None:
            # differentiate the highest-numbered active variable last
            j = max(i for i, k in enumerate(key) if k > 0)
            lower = list(key)
            lower[j] -= 1
            node = symbolic_partial(self[tuple(lower)], j + 1)
            self._cache[key] = node
        return node


def derivative_table(f: EntireFunction) -> DerivativeTable:
    """The cached table attached to ``f``."""
    table = f.__dict__.get("_derivative_table")
    if table is None:
        table = DerivativeTable(f)
        object.__setattr__(f, "_derivative_table", table)
    return table


def symbolic_derivative(f: EntireFunction, z, K) -> np.ndarray:
    return evaluate(derivative_table(f)[K], z)


def _pow2_at_least(x: int) -> int:
    return 1 << max(0, math.ceil(math.log2(max(x, 1))))


def angular_count(K: Sequence[int], minimum: int = 64) -> int:
    """Smallest power of two >= max(minimum, 4 (k_j + 1)) over all j."""
    return _pow2_at_least(max([minimum] + [4 * (k + 1) for k in K]))


def taylor_coefficients(f: EntireFunction, z0, rho, m: int) -> np.ndarray:
    """Scaled Taylor coefficients ``c[K] ~ F^{(K)}(z0) rho^K / K!``, ``K < m``.

    Returned array has shape ``(m,) * n``.
    """
    z0 = as_point(z0, f.arity)
    rho = as_radius(rho, f.arity)
    grid = GridSpec(angular_resolution=m, radial_resolution=2, sample_cap=10**8)
    vals = evaluate(f.ast, skeleton_samples(z0, rho, grid)).reshape((m,) * f.arity)
    if not np.all(np.isfinite(vals)):
        raise QuadratureError(f"non-finite samples of {f.text} on the Cauchy torus at {z0}")
    return np.fft.fftn(vals) / vals.size


def default_cauchy_radius(n: int, L: WeightVector | None = None, z0=None) -> np.ndarray:
    """``min(1, 1/l_j(z0))`` when a weight is given, else ``1``."""
    if L is None:
        return np.ones(n)
    return np.minimum(1.0, 1.0 / L.values(as_point(z0, n)))


def cauchy_derivatives(
    f: EntireFunction,
    z0,
    Ks: Iterable,
    rho=None,
    grid: GridSpec | None = None,
    rtol: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray]:
    """All ``F^{(K)}(z0)`` for ``K`` in ``Ks``, with refinement error estimates.

    Quadrature is run with ``m`` and ``2m`` nodes per circle; the finer value
    is returned and ``|difference|`` is the error estimate.  A disagreement
    above ``rtol * (1 + |value|)`` raises :class:`QuadratureError`.
    """
    Ks = [MultiIndex(tuple(K)) for K in Ks]
    n = f.arity
    rho = np.ones(n) if rho is None else as_radius(rho, n)
    if np.any(rho <= 0):
        raise ValueError("Cauchy radii must be positive")
    kmax = max((max(K.entries) for K in Ks), default=0)
    minimum = 64
    if grid is not None:
        if grid.angular_resolution < 2 * kmax + 8:
            raise ValueError(
                f"angular_resolution {grid.angular_resolution} < 2*max(K)+8 = {2 * kmax + 8}"
            )
        minimum = max(minimum, grid.angular_resolution)
    m = angular_count([kmax], minimum)
    coarse = taylor_coefficients(f, z0, rho, m)
    fine = taylor_coefficients(f, z0, rho, 2 * m)
    values = np.empty(len(Ks), dtype=complex)
    errors = np.empty(len(Ks))
    for i, K in enumerate(Ks):
        scale = K.factorial() / float(np.prod(rho ** np.array(K.entries, dtype=float)))
        a = coarse[K.entries] * scale
        b = fine[K.entries] * scale
        values[i] = b
        errors[i] = abs(a - b)
        if errors[i] > rtol * (1 + abs(b)):
            raise QuadratureError(
                f"Cauchy quadrature for K={K} at {z0} did not converge: "
                f"refinement changed the value by {errors[i]:.3e}"
            )
    return values, errors


def derivative_cauchy(f: EntireFunction, z0, K, rho=None, grid: GridSpec | None = None) -> complex:
    values, _ = cauchy_derivatives(f, z0, [K], rho, grid)
    return complex(values[0])


def log_normalized_derivatives(
    f: EntireFunction, L: WeightVector, Z, Ks: Sequence, method: str = "symbolic"
) -> np.ndarray:
    """``ln(|F^{(K)}(z)| / (K! L^K(z)))`` for each ``K`` (rows) and point (columns)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    logL = L.log_values(Z)
    out = np.empty((len(Ks), Z.shape[0]))
    if method == "symbolic":
        table = derivative_table(f)
        for i, K in enumerate(Ks):
            K = MultiIndex(tuple(K))
            out[i] = log_abs(table[K.entries], Z) - math.log(K.factorial()) - logL @ np.array(
                K.entries, dtype=float
            )
    elif method == "cauchy":
        Ks = [MultiIndex(tuple(K)) for K in Ks]
        kvec = np.array([K.entries for K in Ks], dtype=float)
        logfact = np.array([math.log(K.factorial()) for K in Ks])
        for p, z in enumerate(Z):
            rho = np.minimum(1.0, np.exp(-logL[p]))
            vals, _ = cauchy_derivatives(f, z, Ks, rho)
            with np.errstate(divide="ignore"):
                out[:, p] = np.log(np.abs(vals)) - logfact - kvec @ logL[p]
    else:
        raise ValueError(f"unknown derivative method {method!r}")
    return out


def normalized_derivative(f: EntireFunction, L: WeightVector, z, K, method: str = "auto") -> float:
    """``|F^{(K)}(z)| / (K! prod_j l_j(z)^{k_j})``."""
    if method == "auto":
        method = "symbolic" if f.ast.holomorphic else "cauchy"
    z = as_point(z, f.arity)
    return float(np.exp(log_normalized_derivatives(f, L, z[None, :], [K], method)[0, 0]))


def wirtinger_partial(node: Node, Z, m: int) -> np.ndarray:
    """``d/dz_m = (d/dx_m - i d/dy_m) / 2`` by central differences (1-based ``m``).

    Step ``h = 1e-5 (1 + |z_m|)``; works for non-holomorphic trees.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    h = 1e-5 * (1 + np.abs(Z[:, m - 1]))
    e = np.zeros(Z.shape[1])
    e[m - 1] = 1.0
    step = h[:, None] * e[None, :]
    dx = (evaluate(node, Z + step) - evaluate(node, Z - step)) / (2 * h)
    dy = (evaluate(node, Z + 1j * step) - evaluate(node, Z - 1j * step)) / (2 * h)
    return 0.5 * (dx - 1j * dy)
