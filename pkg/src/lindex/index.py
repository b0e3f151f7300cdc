"""Brute-force estimation of the L-index in joint variables.

For each grid point the normalized derivatives
``|F^{(J)}(z)| / (J! L^J(z))`` are computed for all ``||J|| <= j_max``;
the estimate is the least ``m`` whose orders ``||K|| <= m`` dominate all of
them at every grid point.  Comparisons are done on logarithms, and margins
are relative: ``1 - LHS/RHS``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .derivatives import log_normalized_derivatives
from .functions import EntireFunction, WeightVector
from .modulus import log_max_modulus
from .polydisc import GridSpec, MultiIndex, as_radius, multi_indices

UNBOUNDED = "unbounded within scan"


@dataclass
class IndexEstimate:
    candidate_N: int | None
    verdict: str  # "bounded" or UNBOUNDED
    m_max: int
    j_max: int
    worst_margin: float
    witness: dict
    per_m: list = field(default_factory=list)
    grid: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "candidate_N": self.candidate_N if self.candidate_N is not None else UNBOUNDED,
            "verdict": self.verdict,
            "m_max": self.m_max,
            "j_max": self.j_max,
            "worst_margin": self.worst_margin,
            "witness": self.witness,
            "per_m": self.per_m,
            "grid": self.grid,
        }


def _log_table(f, L, Z, Ks, method, threads):
    if threads <= 1 or len(Z) < 2 * threads:
        return log_normalized_derivatives(f, L, Z, Ks, method)
    chunks = np.array_split(Z, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda c: log_normalized_derivatives(f, L, c, Ks, method), chunks))
    return np.concatenate(parts, axis=1)


def _relative_margin(log_lhs: np.ndarray, log_rhs: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", over="ignore"):
        margin = 1.0 - np.exp(log_lhs - log_rhs)
    margin = np.where(np.isneginf(log_lhs), 1.0, margin)
    return np.where(np.isneginf(log_rhs) & ~np.isneginf(log_lhs), -np.inf, margin)


def estimate_joint_index(
    f: EntireFunction,
    L: WeightVector,
    z_grid,
    m_max: int = 6,
    j_max: int | None = None,
    rtol: float = 1e-9,
    method: str = "symbolic",
    threads: int = 1,
) -> IndexEstimate:
    """Least ``m <= m_max`` satisfying the bounded-index inequality on the grid.

    A point passes for ``m`` when its relative margin is ``>= -rtol``.  The
    witness is the first grid point (row-major order) attaining the worst
    margin for the returned ``m`` (or for ``m_max`` when none passes).
    """
    if j_max is None:
        j_max = m_max + 4
    if j_max < m_max + 2:
        raise ValueError(f"j_max={j_max} must be >= m_max + 2 = {m_max + 2}")
    if f.is_zero:
        raise ValueError("the zero function has no L-index")
    Z = np.atleast_2d(np.asarray(z_grid, dtype=complex))
    if Z.shape[0] == 0:
        raise ValueError("empty z grid")
    Ks = multi_indices(f.arity, j_max)
    MultiIndex((j_max,) + (0,) * (f.arity - 1)).factorial()  # overflow guard
    logs = _log_table(f, L, Z, Ks, method, threads)
    if np.all(np.isneginf(logs)):
        raise ValueError("F and all its derivatives vanish on the grid")
    norms = np.array([K.norm for K in Ks])
    log_lhs = logs.max(axis=0)
    j_arg = logs.argmax(axis=0)
    per_m = []
    chosen = None
    for m in range(m_max + 1):
        log_rhs = logs[norms <= m].max(axis=0)
        margin = _relative_margin(log_lhs, log_rhs)
        p = int(np.argmin(margin))
        passes = bool(margin[p] >= -rtol)
        per_m.append({"m": m, "worst_margin": float(margin[p]), "passes": passes})
        if passes or m == m_max:
            chosen = (m, margin, p, passes)
            if passes:
                break
    m, margin, p, passes = chosen
    witness = {
        "z": Z[p],
        "J": Ks[int(j_arg[p])].entries,
        "margin": float(margin[p]),
        "m": m,
    }
    return IndexEstimate(
        candidate_N=m if passes else None,
        verdict="bounded" if passes else UNBOUNDED,
        m_max=m_max,
        j_max=j_max,
        worst_margin=float(margin[p]),
        witness=witness,
        per_m=per_m,
        grid={
            "points": int(Z.shape[0]),
            "max_modulus": float(np.abs(Z).max()),
            "method": method,
            "rtol": rtol,
        },
    )


def index_margin(f: EntireFunction, L: WeightVector, z, m: int, j_max: int) -> float:
    """Relative margin of the bounded-index inequality at a single point."""
    Ks = multi_indices(f.arity, j_max)
    logs = log_normalized_derivatives(f, L, np.atleast_2d(z), Ks)[:, 0]
    norms = np.array([K.norm for K in Ks])
    return float(_relative_margin(logs.max(), logs[norms <= m].max()))


@dataclass
class LocalBehaviorReport:
    R_inner: list
    R_outer: list
    p1_estimate: float
    log_p1: float
    trace: list
    growth: float
    consistent: bool


def local_behavior_ratio(
    f: EntireFunction,
    L: WeightVector,
    R_inner=None,
    R_outer=None,
    z0_grid=None,
    grid: GridSpec = GridSpec(angular_resolution=32, refinement_depth=8),
    growth_limit: float = 2.0,
) -> LocalBehaviorReport:
    """Ratios ``max_{T(z0, R''/L(z0))} |F| / max_{T(z0, R'/L(z0))} |F|`` over z0.

    Requires ``0 < R' < (e, ..., e) < R''``.  The trace is ordered by
    ``|z0|``; ``growth`` is the ratio between the largest trace value on the
    outermost and on the innermost ``|z0|`` shell, and the trace counts as
    consistent with bounded index while ``growth < growth_limit``.
    """
    n = f.arity
    R_inner = as_radius(0.5 * np.ones(n) if R_inner is None else R_inner, n)
    R_outer = as_radius(3.5 * np.ones(n) if R_outer is None else R_outer, n)
    if not (np.all(R_inner > 0) and np.all(R_inner < math.e) and np.all(R_outer > math.e)):
        raise ValueError("need 0 < R' < e < R'' componentwise")
    if z0_grid is None or len(z0_grid) == 0:
        raise ValueError("empty z0 grid")
    Z0 = np.atleast_2d(np.asarray(z0_grid, dtype=complex))
    order = np.argsort(np.linalg.norm(Z0, axis=1), kind="stable")
    trace = []
    for z0 in Z0[order]:
        inv = np.exp(-L.log_values(z0))
        outer = log_max_modulus(f, R_outer * inv, grid, center=z0)
        inner = log_max_modulus(f, R_inner * inv, grid, center=z0)
        if not np.isfinite(inner.log_value):
            raise ValueError(f"F vanishes on the inner skeleton around {z0}")
        log_ratio = outer.log_value - inner.log_value
        trace.append(
            {
                "z0": z0,
                "abs_z0": float(np.linalg.norm(z0)),
                "log_ratio": log_ratio,
                "ratio": float(np.exp(min(log_ratio, 700.0))),
            }
        )
    shells = np.round([t["abs_z0"] for t in trace], 9)
    logs = np.array([t["log_ratio"] for t in trace])
    first = logs[shells == shells[0]].max()
    last = logs[shells == shells[-1]].max()
    growth = float(np.exp(min(last - first, 700.0)))
    log_p1 = float(logs.max())
    return LocalBehaviorReport(
        R_inner=R_inner.tolist(),
        R_outer=R_outer.tolist(),
        p1_estimate=float(np.exp(min(log_p1, 700.0))),
        log_p1=log_p1,
        trace=trace,
        growth=growth,
        consistent=growth < growth_limit,
    )
