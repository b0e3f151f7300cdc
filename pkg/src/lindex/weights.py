"""Properties of the weight vector L: local distortion, classes Q^n and K^n.

Sampling can refute class membership but never prove it, so every
"satisfied" verdict is reported together with the range that was scanned.
All ratios are handled in log space; a weight such as ``exp(exp(|z|))``
overflows float64 long before the scan range ends.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .derivatives import wirtinger_partial
from .expr import Node, evaluate, parse_expression, symbolic_partial
from .functions import WeightVector
from .polydisc import (
    GridSpec,
    as_point,
    as_radius,
    polydisc_samples,
    skeleton_angles,
    skeleton_samples,
)

LAMBDA_GRID = GridSpec(angular_resolution=16, radial_resolution=9, refinement_depth=0)
KN_GRID = GridSpec(angular_resolution=64, radial_resolution=2, refinement_depth=0)


@dataclass(frozen=True)
class Thresholds:
    """Desk-scale blowup rules shared by the class scans."""

    blowup: float = 1e6  # extremal value beyond this is treated as infinite
    growth_factor: float = 10.0  # jump between consecutive radius-grid entries


@dataclass
class ClassVerdict:
    verdict: str  # "satisfied" | "violated" | "inconclusive"
    extremal_value: float
    reason: str = ""
    witness: dict = field(default_factory=dict)
    scanned_range: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    @property
    def violated(self) -> bool:
        return self.verdict == "violated"


def _grid_info(grid: GridSpec) -> dict:
    return {
        "angular_resolution": grid.angular_resolution,
        "radial_resolution": grid.radial_resolution,
        "refinement_depth": grid.refinement_depth,
    }


def _exp(x):
    with np.errstate(over="ignore"):
        return np.exp(x)


@dataclass
class LambdaBounds:
    """Sampled ``lambda_{1,j}(z0, R)`` and ``lambda_{2,j}(z0, R)``."""

    log_lower: np.ndarray
    log_upper: np.ndarray
    lower_witness: np.ndarray
    upper_witness: np.ndarray

    @property
    def lower(self) -> np.ndarray:
        return _exp(self.log_lower)

    @property
    def upper(self) -> np.ndarray:
        return _exp(self.log_upper)


def lambda_bounds(L: WeightVector, z0, R, grid: GridSpec = LAMBDA_GRID) -> LambdaBounds:
    """Inf and sup of ``l_j(z)/l_j(z0)`` over samples of ``D^n[z0, R/L(z0)]``.

    The sampled inf is >= the true inf and the sampled sup is <= the true
    sup; the center is always sampled, so ``lower <= 1 <= upper``.
    """
    n = L.arity
    z0 = as_point(z0, n)
    R = as_radius(R, n)
    log0 = L.log_values(z0)
    radii = R * _exp(-log0)
    pts = polydisc_samples(z0, radii, grid)
    logs = L.log_values(pts) - log0
    lo = logs.argmin(axis=0)
    hi = logs.argmax(axis=0)
    cols = np.arange(n)
    return LambdaBounds(logs[lo, cols], logs[hi, cols], pts[lo], pts[hi])


def _as_radius_grid(R, n: int) -> np.ndarray:
    arr = np.asarray(R, dtype=float)
    if arr.ndim <= 1:
        arr = as_radius(arr, n)[None, :]
    return np.array([as_radius(r, n) for r in arr])


def qn_scan(
    L: WeightVector,
    R,
    z0_grid,
    grid: GridSpec = LAMBDA_GRID,
    thresholds: Thresholds = Thresholds(),
) -> ClassVerdict:
    """Scan the Q^n condition ``0 < lambda_1(R) <= lambda_2(R) < inf``.

    ``R`` is one radius vector or a grid of them (scanned in the given
    order).  Per radius, ``lambda_1`` is the inf over the z0 grid of
    ``lambda_1(z0, R)`` and ``lambda_2`` the sup of ``lambda_2(z0, R)``.
    Violation: ``lambda_2 > blowup`` or ``lambda_1 < 1/blowup``, or a jump
    by more than ``growth_factor`` between consecutive radii.
    """
    n = L.arity
    Rs = _as_radius_grid(R, n)
    z0s = np.atleast_2d(np.asarray(z0_grid, dtype=complex))
    if z0s.shape[0] == 0:
        raise ValueError("empty z0 grid")
    log_cap = np.log(thresholds.blowup)
    log_growth = np.log(thresholds.growth_factor)
    trace = []
    verdict, reason, witness = "satisfied", "", {}
    prev = None
    for R_k in Rs:
        lo = np.full(n, np.inf)
        hi = np.full(n, -np.inf)
        lo_at = [None] * n
        hi_at = [None] * n
        for z0 in z0s:
            b = lambda_bounds(L, z0, R_k, grid)
            for j in range(n):
                if b.log_lower[j] < lo[j]:
                    lo[j], lo_at[j] = b.log_lower[j], (z0, b.lower_witness[j])
                if b.log_upper[j] > hi[j]:
                    hi[j], hi_at[j] = b.log_upper[j], (z0, b.upper_witness[j])
        trace.append(
            {
                "R": R_k.tolist(),
                "lambda1": _exp(lo).tolist(),
                "lambda2": _exp(hi).tolist(),
                "log_lambda1": lo.tolist(),
                "log_lambda2": hi.tolist(),
            }
        )
        if verdict == "satisfied":
            for j in range(n):
                rule = None
                if hi[j] > log_cap:
                    rule, at = f"lambda2_{j + 1} exceeds {thresholds.blowup:g}", hi_at[j]
                elif lo[j] < -log_cap:
                    rule, at = f"lambda1_{j + 1} below {1 / thresholds.blowup:g}", lo_at[j]
                elif prev is not None and hi[j] - prev[1][j] > log_growth:
                    rule, at = (
                        f"lambda2_{j + 1} grew by more than {thresholds.growth_factor:g}x "
                        "between consecutive radii",
                        hi_at[j],
                    )
                elif prev is not None and prev[0][j] - lo[j] > log_growth:
                    rule, at = (
                        f"lambda1_{j + 1} shrank by more than {thresholds.growth_factor:g}x "
                        "between consecutive radii",
                        lo_at[j],
                    )
                if rule:
                    verdict, reason = "violated", rule
                    witness = {"R": R_k.tolist(), "j": j + 1, "z0": at[0], "z": at[1]}
                    break
        prev = (lo, hi)
    all_lo = np.min([t["log_lambda1"] for t in trace], axis=0)
    all_hi = np.max([t["log_lambda2"] for t in trace], axis=0)
    return ClassVerdict(
        verdict=verdict,
        extremal_value=float(_exp(all_hi.max())),
        reason=reason or "no blowup within the scanned range",
        witness=witness,
        scanned_range={
            "R": Rs.tolist(),
            "z0_count": int(z0s.shape[0]),
            "z0_max_modulus": float(np.abs(z0s).max()),
            "lambda1_min": _exp(all_lo).tolist(),
            "lambda2_max": _exp(all_hi).tolist(),
        },
        trace=trace,
        provenance={"grid": _grid_info(grid), "thresholds": vars(thresholds).copy()},
    )


def kn_scan(
    L: WeightVector,
    R_grid,
    grid: GridSpec = KN_GRID,
    thresholds: Thresholds = Thresholds(),
) -> ClassVerdict:
    """Scan the K^n condition ``max l_j(R e^{i T2}) / l_j(R e^{i T1}) <= c``.

    Per radius the angular max ratio is ``max l_j / min l_j`` over the
    skeleton samples.  Violation: the ratio exceeds ``blowup``, jumps by
    more than ``growth_factor`` between consecutive radii, or rises
    monotonically over the whole grid by more than ``growth_factor``
    (the constant must be uniform in R).
    """
    n = L.arity
    Rs = _as_radius_grid(R_grid, n)
    angles = skeleton_angles(n, grid)
    log_cap = np.log(thresholds.blowup)
    log_growth = np.log(thresholds.growth_factor)
    trace = []
    verdict, reason, witness = "satisfied", "", {}
    for k, R_k in enumerate(Rs):
        logs = L.log_values(skeleton_samples(np.zeros(n), R_k, grid))
        lo = logs.argmin(axis=0)
        hi = logs.argmax(axis=0)
        cols = np.arange(n)
        log_ratio = logs[hi, cols] - logs[lo, cols]
        j = int(np.argmax(log_ratio))
        trace.append(
            {
                "R": R_k.tolist(),
                "ratio": _exp(log_ratio).tolist(),
                "log_ratio": log_ratio.tolist(),
                "theta2": angles[hi[j]].tolist(),
                "theta1": angles[lo[j]].tolist(),
                "j": j + 1,
            }
        )
        if verdict != "satisfied":
            continue
        rule = None
        if log_ratio[j] > log_cap:
            rule = f"angular ratio of l_{j + 1} exceeds {thresholds.blowup:g}"
        elif k > 0 and log_ratio[j] - max(trace[k - 1]["log_ratio"]) > log_growth:
            rule = (
                f"angular ratio grew by more than {thresholds.growth_factor:g}x "
                "between consecutive radii"
            )
        if rule:
            verdict, reason = "violated", rule
            witness = {
                "R": R_k.tolist(),
                "j": j + 1,
                "theta2": angles[hi[j]].tolist(),
                "theta1": angles[lo[j]].tolist(),
                "ratio": float(_exp(log_ratio[j])),
            }
    c_trace = np.array([max(t["log_ratio"]) for t in trace])
    if verdict == "satisfied" and len(c_trace) > 1:
        rising = np.all(np.diff(c_trace) >= -1e-12)
        if rising and c_trace[-1] - c_trace[0] > log_growth:
            last = trace[-1]
            verdict = "violated"
            reason = (
                f"angular ratio rises monotonically by {np.exp(c_trace[-1] - c_trace[0]):.3g}x "
                f"(> {thresholds.growth_factor:g}x) across the radius grid"
            )
            witness = {
                "R": last["R"],
                "j": last["j"],
                "theta2": last["theta2"],
                "theta1": last["theta1"],
                "ratio": float(_exp(c_trace[-1])),
            }
    return ClassVerdict(
        verdict=verdict,
        extremal_value=float(_exp(c_trace.max())),
        reason=reason or "angular ratio bounded within the scanned range",
        witness=witness,
        scanned_range={"R": Rs.tolist(), "c_empirical": float(_exp(c_trace.max()))},
        trace=trace,
        provenance={"grid": _grid_info(grid), "thresholds": vars(thresholds).copy()},
    )


@dataclass
class Prop1Result:
    """Outcome of the sufficient condition ``|dl_j/dz_m| <= P (c + |l_j|)``."""

    P: float
    c: float
    witness: dict

    def envelope(self, R) -> float:
        """Upper bound ``exp((P/c) sum r_j)`` for ``lambda_{2,j}(R)`` of ``L*``."""
        return float(np.exp(self.P / self.c * np.sum(as_radius(R))))

    def lower_envelope(self, R) -> float:
        return 1.0 / self.envelope(R)


def _as_nodes(l_raw, n: int | None = None) -> list[Node]:
    items = [l_raw] if isinstance(l_raw, (str, Node)) else list(l_raw)
    n = n or len(items)
    return [parse_expression(x, n) if isinstance(x, str) else x for x in items]


def prop1_check(l_raw: Sequence, c: float, domain_grid) -> Prop1Result:
    """Estimate the smallest ``P`` with ``|dl_j/dz_m| / (c + |l_j|) <= P`` on a grid.

    Holomorphic components are differentiated symbolically, others by
    Wirtinger central differences.
    """
    if c <= 0:
        raise ValueError("c must be positive")
    nodes = _as_nodes(l_raw)
    n = len(nodes)
    Z = np.atleast_2d(np.asarray(domain_grid, dtype=complex))
    best, witness = -np.inf, {}
    for j, node in enumerate(nodes):
        denom = c + np.abs(evaluate(node, Z))
        for m in range(1, n + 1):
            if node.holomorphic:
                d = np.broadcast_to(evaluate(symbolic_partial(node, m), Z), denom.shape)
            else:
                d = wirtinger_partial(node, Z, m)
            q = np.abs(d) / denom
            k = int(np.argmax(q))
            if q[k] > best:
                best = float(q[k])
                witness = {"z": Z[k], "j": j + 1, "m": m}
    return Prop1Result(P=best, c=float(c), witness=witness)


def prop1_containment(
    l_raw: Sequence,
    result: Prop1Result,
    R_grid,
    z0_grid,
    grid: GridSpec = LAMBDA_GRID,
    rtol: float = 1e-6,
) -> list[dict]:
    """Sampled ``lambda_{1,2}(R)`` of ``L*`` against the exponential envelope."""
    nodes = _as_nodes(l_raw)
    star = WeightVector(tuple(nodes)).starred(result.c)
    records = []
    for R in _as_radius_grid(R_grid, len(nodes)):
        scan = qn_scan(star, R, z0_grid, grid, Thresholds(blowup=np.inf))
        lam2 = np.array(scan.scanned_range["lambda2_max"])
        lam1 = np.array(scan.scanned_range["lambda1_min"])
        env = result.envelope(R)
        records.append(
            {
                "R": R.tolist(),
                "lambda1": lam1.tolist(),
                "lambda2": lam2.tolist(),
                "envelope": env,
                "inside": bool(np.all(lam2 <= env * (1 + rtol)) and np.all(lam1 >= (1 - rtol) / env)),
            }
        )
    return records


@dataclass
class ProbeResult:
    r: list
    products: list
    diverging: bool
    diagnostic: str


def qn_growth_probe(
    L: WeightVector,
    z_star,
    j: int,
    r_list: Sequence[float],
    theta: float = 0.0,
    bound: float = 100.0,
) -> ProbeResult:
    """Products ``r * l_j(z* + r e^{i theta} e_j)`` along a coordinate ray.

    A member of Q^n makes them tend to infinity; a tail that stays below
    ``bound`` or fails to increase is evidence against membership.
    """
    n = L.arity
    z_star = as_point(z_star, n)
    r = np.asarray(r_list, dtype=float)
    if np.any(r <= 0) or np.any(np.diff(r) <= 0):
        raise ValueError("r_list must be positive and increasing")
    pts = np.repeat(z_star[None, :], len(r), axis=0)
    pts[:, j - 1] = z_star[j - 1] + r * np.exp(1j * theta)
    log_prod = np.log(r) + L.log_values(pts)[:, j - 1]
    tail = log_prod[-max(2, len(r) // 3):]
    diverging = bool(np.all(np.diff(tail) > 0) and tail[-1] > np.log(bound))
    return ProbeResult(
        r=r.tolist(),
        products=_exp(log_prod).tolist(),
        diverging=diverging,
        diagnostic="consistent with Q^n" if diverging else "evidence against Q^n (bounded tail)",
    )

