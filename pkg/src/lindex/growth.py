"""Growth of ln M(F, R) against weight integrals.

Covers the permutation/angle-minimized integral bound, the pointwise
derivative-growth inequality along a ray with its beta/gamma integrands,
the weight-decay constant C, limsup verdicts, the comparison of the
``NC + N + 1`` and ``(C + 1)(N + 1)`` bounds, and log-convexity of ln M.
"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .derivatives import log_normalized_derivatives
from .functions import EntireFunction, WeightVector
from .modulus import log_max_modulus
from .polydisc import GridSpec, as_radius, multi_indices
from .quadrature import adaptive_simpson, simpson

MODES = ("verbatim", "ordered")
DIVERGENCE_FACTOR = 1.1


def theta_grid(n: int, resolution: int | None = None, seed: int = 0) -> np.ndarray:
    """Angle tuples for min/max over ``[0, 2pi]^n``.

    16 angles per coordinate for n <= 2, 8 for n = 3, and 512 seeded
    uniform samples for n >= 4 (``resolution`` overrides the per-axis count,
    or the sample count when n >= 4).
    """
    if n >= 4:
        rng = np.random.default_rng(seed)
        return rng.uniform(0, 2 * np.pi, size=(resolution or 512, n))
    m = resolution or (16 if n <= 2 else 8)
    axis = 2 * np.pi * np.arange(m) / m
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


@dataclass(frozen=True)
class Thm2Config:
    R0: tuple | None = None  # base radius; defaults to (1, ..., 1)
    theta_resolution: int | None = None
    permutations: tuple | None = None  # 1-based images (sigma(1), ..., sigma(n)); None = all
    mode: str = "verbatim"
    seed: int = 0
    rtol: float = 1e-6

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    def base_radius(self, n: int) -> np.ndarray:
        R0 = as_radius(np.ones(n) if self.R0 is None else self.R0, n)
        if np.any(R0 <= 0):
            raise ValueError("R0 must be positive")
        return R0

    def permutation_set(self, n: int) -> list[tuple[int, ...]]:
        if self.permutations is None:
            return list(itertools.permutations(range(1, n + 1)))
        perms = [tuple(int(s) for s in p) for p in self.permutations]
        if not perms:
            raise ValueError("permutation set is empty")
        for p in perms:
            if sorted(p) != list(range(1, n + 1)):
                raise ValueError(f"{p} is not a permutation of 1..{n}")
        return perms


def shifted_radius(sigma: Sequence[int], j: int, R, R0, mode: str = "verbatim"):
    """Per-coordinate rule for ``R(j, sigma, t)``.

    Returns a list with entries ``("base", r0_k)``, ``("t", None)`` or
    ``("R", r_k)``.  ``verbatim`` compares ``sigma(k)`` with ``j``; a
    coordinate with ``sigma(k) == j != k`` is not covered by that rule and
    keeps ``r_k``.  ``ordered`` compares ``sigma(k)`` with ``sigma(j)``.
    """
    ref = j if mode == "verbatim" else sigma[j - 1]
    out = []
    for k in range(1, len(sigma) + 1):
        if k == j:
            out.append(("t", None))
        elif sigma[k - 1] < ref:
            out.append(("base", float(R0[k - 1])))
        else:
            out.append(("R", float(R[k - 1])))
    return out


def _weight_along(L: WeightVector, j: int, rule, thetas: np.ndarray):
    """Integrand ``t -> l_j(R(j, sigma, t) e^{i Theta})`` batched over thetas."""
    phases = np.exp(1j * thetas)  # (nT, n)

    def integrand(t: np.ndarray) -> np.ndarray:
        moduli = np.empty((len(t), len(rule)))
        for k, (kind, value) in enumerate(rule):
            moduli[:, k] = t if kind == "t" else value
        pts = phases[:, None, :] * moduli[None, :, :]
        with np.errstate(over="ignore"):
            return np.exp(L.log_values(pts)[..., j - 1])

    return integrand


@dataclass
class Thm2Result:
    value: float
    sigma: tuple
    theta: np.ndarray
    mode: str
    by_mode: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def thm2_integral(L: WeightVector, R, cfg: Thm2Config = Thm2Config()) -> Thm2Result:
    """``min over sigma, Theta of sum_j int_0^{r_j} l_j(R(j, sigma, t) e^{i Theta}) dt``.

    Both case-table modes are evaluated; ``value`` follows ``cfg.mode`` and
    ``by_mode`` reports each.
    """
    n = L.arity
    R = as_radius(R, n)
    R0 = cfg.base_radius(n)
    notes = []
    if np.any(R < R0):
        notes.append(f"R={R.tolist()} is below the base radius R0={R0.tolist()} in some coordinate")
    thetas = theta_grid(n, cfg.theta_resolution, cfg.seed)
    by_mode = {}
    for mode in MODES:
        best = None
        for sigma in cfg.permutation_set(n):
            total = np.zeros(len(thetas))
            for j in range(1, n + 1):
                if R[j - 1] == 0:
                    continue
                rule = shifted_radius(sigma, j, R, R0, mode)
                value, _ = adaptive_simpson(
                    _weight_along(L, j, rule, thetas), 0.0, float(R[j - 1]), rtol=cfg.rtol
                )
                total += value
            k = int(np.argmin(total))
            if best is None or total[k] < best[0]:
                best = (float(total[k]), sigma, thetas[k])
        by_mode[mode] = {"value": best[0], "sigma": best[1], "theta": best[2].tolist()}
    chosen = by_mode[cfg.mode]
    for note in notes:
        warnings.warn(note, RuntimeWarning, stacklevel=2)
    return Thm2Result(
        value=chosen["value"],
        sigma=chosen["sigma"],
        theta=np.asarray(chosen["theta"]),
        mode=cfg.mode,
        by_mode=by_mode,
        warnings=notes,
    )


def _tail_growth_ok(ratios: Sequence[float], factor: float = 1.1, steps: int = 3) -> bool:
    r = np.asarray(ratios, dtype=float)
    if len(r) < 2:
        return True
    tail = r[-(steps + 1):]
    with np.errstate(divide="ignore", invalid="ignore"):
        jumps = tail[1:] / tail[:-1]
    return bool(np.all(np.isfinite(jumps)) and np.all(jumps <= factor))


@dataclass
class RatioScan:
    records: list
    consistent: bool
    direction: list


def thm2_ratio_scan(
    f: EntireFunction,
    L: WeightVector,
    direction,
    r_seq: Sequence[float],
    cfg: Thm2Config = Thm2Config(),
    grid: GridSpec = GridSpec(),
) -> RatioScan:
    """``ln M(F, r d) / thm2_integral(L, r d)`` along the ray through ``d``.

    Consistent when none of the last three steps raises the ratio by more
    than a factor 1.1.
    """
    n = f.arity
    d = as_radius(direction, n)
    if np.any(d <= 0):
        raise ValueError("direction must be positive")
    records = []
    for r in r_seq:
        R = r * d
        lnM = log_max_modulus(f, R, grid).log_value
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            bound = thm2_integral(L, R, cfg)
        if bound.value <= 0:
            raise ZeroDivisionError(f"weight integral vanishes at R={R.tolist()}")
        records.append(
            {
                "r": float(r),
                "norm_R": float(R.sum()),
                "ln_M": lnM,
                "bound": bound.value,
                "ratio": lnM / bound.value,
                "sigma": bound.sigma,
                "by_mode": bound.by_mode,
            }
        )
    ok = _tail_growth_ok([rec["ratio"] for rec in records])
    return RatioScan(records=records, consistent=ok, direction=d.tolist())


def _pivot(R: np.ndarray, pivot: int | None) -> int:
    if pivot is None:
        return int(np.argmax(R)) + 1
    if not 1 <= pivot <= len(R) or R[pivot - 1] == 0:
        raise ValueError(f"pivot {pivot} must index a nonzero radius")
    return pivot


@dataclass
class BetaGammaTrace:
    pivot: int
    alpha: np.ndarray
    t: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    beta_tilde: np.ndarray
    u_prime: np.ndarray  # (len(t), n)


@dataclass
class Thm3Result:
    rhs: float
    lhs: float
    log_g0: float
    integral: float
    holds: bool
    trace: BetaGammaTrace


class DegenerateBasePoint(ValueError):
    pass


def _ddt(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Central differences inside, second-order one-sided at both ends.

    Written in terms of differences so constant data gives exactly 0.
    """
    v = np.moveaxis(values, axis, -1)
    d = np.empty_like(v)
    d[..., 1:-1] = (v[..., 2:] - v[..., :-2]) / (2 * h)
    d[..., 0] = (4 * (v[..., 1] - v[..., 0]) - (v[..., 2] - v[..., 0])) / (2 * h)
    d[..., -1] = ((v[..., -3] - v[..., -1]) - 4 * (v[..., -2] - v[..., -1])) / (2 * h)
    return np.moveaxis(d, -1, axis)


def _ray_weights(L: WeightVector, alpha, thetas, t):
    """``l_j(t A e^{i Theta})`` with shape ``(len(thetas), len(t), n)``."""
    pts = (t[None, :, None] * alpha[None, None, :]) * np.exp(1j * thetas)[:, None, :]
    with np.errstate(over="ignore"):
        return np.exp(L.log_values(pts))


def thm3_rhs(
    f: EntireFunction,
    L: WeightVector,
    R,
    theta,
    N: int,
    pivot: int | None = None,
    t_points: int = 2049,
    tol: float = 1e-6,
) -> Thm3Result:
    """Right-hand side of the derivative-growth inequality along ``t A e^{i Theta}``.

    ``rhs = ln g(0) + int_0^{r_m} (beta + gamma)``, where ``g`` is the max of
    normalized derivatives of order ``<= N``; ``u_j'`` comes from central
    differences on the uniform ``t`` grid (second-order one-sided at the
    ends).  ``holds`` compares against ``ln g(R e^{i Theta})``.
    """
    n = f.arity
    R = as_radius(R, n)
    if not np.any(R > 0):
        raise ValueError("R must have a nonzero component")
    m = _pivot(R, pivot)
    r_m = float(R[m - 1])
    alpha = R / r_m
    theta = np.asarray(theta, dtype=float).reshape(n)
    t = np.linspace(0.0, r_m, t_points if t_points % 2 else t_points + 1)
    l = _ray_weights(L, alpha, theta[None, :], t)[0]  # (T, n)
    u_prime = _ddt(l, t[1] - t[0], axis=0)
    Ks = multi_indices(n, N)
    kmat = np.array([K.entries for K in Ks], dtype=float)  # (nK, n)
    beta = ((kmat + 1) @ (alpha[:, None] * l.T)).max(axis=0)
    gamma = (kmat @ (np.maximum(-u_prime, 0.0) / l).T).max(axis=0)
    beta_tilde = l @ alpha
    integral = float(simpson(beta + gamma, 0.0, r_m))
    log_g0 = float(log_normalized_derivatives(f, L, np.zeros((1, n)), Ks).max())
    if not np.isfinite(log_g0):
        raise DegenerateBasePoint(
            "all normalized derivatives of order <= N vanish at 0; "
            "shifting the base point is not supported"
        )
    z = R * np.exp(1j * theta)
    lhs = float(log_normalized_derivatives(f, L, z[None, :], Ks).max())
    rhs = log_g0 + integral
    return Thm3Result(
        rhs=rhs,
        lhs=lhs,
        log_g0=log_g0,
        integral=integral,
        holds=bool(lhs <= rhs + tol * (1 + abs(rhs))),
        trace=BetaGammaTrace(m, alpha, t, beta, gamma, beta_tilde, u_prime),
    )


@dataclass
class CEstimate:
    C: float
    witness: dict
    tail: list  # per R: max of the quantity at t = r_m
    vanishing: bool


def suplinf_C(
    L: WeightVector,
    R_grid,
    thetas=None,
    pivot: int | None = None,
    t_points: int = 1025,
) -> CEstimate:
    """Empirical ``C = sup (-u_j')^+ / ((r_j/r_m) l_j^2)`` over radii, t, angles, j.

    ``tail`` holds the same quantity at the far end ``t = r_m`` for each
    radius; ``vanishing`` reports whether it decays towards 0 (last value at
    most a tenth of the largest, or identically 0).
    """
    Rs = np.atleast_2d(np.asarray(R_grid, dtype=float))
    n = L.arity
    thetas = theta_grid(n) if thetas is None else np.atleast_2d(np.asarray(thetas, dtype=float))
    best, witness, tail = 0.0, {}, []
    for R in Rs:
        R = as_radius(R, n)
        m = _pivot(R, pivot)
        r_m = float(R[m - 1])
        alpha = R / r_m
        t = np.linspace(0.0, r_m, t_points)
        l = _ray_weights(L, alpha, thetas, t)  # (nT, T, n)
        u_prime = _ddt(l, t[1] - t[0], axis=1)
        active = alpha > 0
        q = np.zeros_like(l)
        q[..., active] = np.maximum(-u_prime[..., active], 0.0) / (
            alpha[active] * l[..., active] ** 2
        )
        k = np.unravel_index(int(np.argmax(q)), q.shape)
        if q[k] > best:
            best = float(q[k])
            witness = {"R": R.tolist(), "theta": thetas[k[0]].tolist(), "t": float(t[k[1]]), "j": int(k[2]) + 1}
        tail.append(float(q[:, -1, :].max()))
    peak = max(tail) if tail else 0.0
    vanishing = peak == 0.0 or tail[-1] <= 0.1 * peak
    return CEstimate(C=best, witness=witness, tail=tail, vanishing=bool(vanishing))


def weight_ray_integral(L: WeightVector, R, thetas=None, pivot: int | None = None, rtol=1e-6):
    """``max_Theta int_0^{r_m} sum_j (r_j/r_m) l_j((tau/r_m) R e^{i Theta}) dtau``."""
    n = L.arity
    R = as_radius(R, n)
    m = _pivot(R, pivot)
    r_m = float(R[m - 1])
    alpha = R / r_m
    thetas = theta_grid(n) if thetas is None else np.atleast_2d(np.asarray(thetas, dtype=float))

    def integrand(t):
        return _ray_weights(L, alpha, thetas, t) @ alpha

    values, _ = adaptive_simpson(integrand, 0.0, r_m, rtol=rtol)
    k = int(np.argmax(values))
    return float(values[k]), thetas[k]


@dataclass
class GrowthVerdict:
    verdict: str  # "consistent" | "inconsistent" | "hypotheses not met"
    limsup: float
    bound: float
    bound_kind: str  # "N+1" or "(C+1)N+1"
    C: float
    C_vanishing: bool
    N: int
    records: list
    pivot: int | None
    tail_count: int


def growth_verdict(
    f: EntireFunction,
    L: WeightVector,
    direction,
    r_seq: Sequence[float],
    N: int,
    cfg: Thm2Config = Thm2Config(),
    grid: GridSpec = GridSpec(),
    pivot: int | None = None,
    tol: float = 1e-6,
) -> GrowthVerdict:
    """Tail estimate of ``ln M / max_Theta int (sum_j alpha_j l_j)`` against the bounds.

    The limsup is the max over the last ``ceil(K/3)`` radii.  When the
    weight-decay quantity vanishes along the ray the ``N + 1`` bound applies,
    otherwise ``(C + 1) N + 1``.  The weight integral counts as divergent when
    it increases strictly and grows by ``DIVERGENCE_FACTOR`` over the tail;
    otherwise the verdict is "hypotheses not met".
    """
    n = f.arity
    d = as_radius(direction, n)
    if np.any(d <= 0):
        raise ValueError("direction must be positive")
    thetas = theta_grid(n, cfg.theta_resolution, cfg.seed)
    records = []
    for r in r_seq:
        R = r * d
        lnM = log_max_modulus(f, R, grid).log_value
        denom, theta = weight_ray_integral(L, R, thetas, pivot)
        records.append(
            {"r": float(r), "norm_R": float(R.sum()), "ln_M": lnM, "denominator": denom,
             "ratio": lnM / denom if denom > 0 else math.nan, "theta": theta.tolist()}
        )
    C = suplinf_C(L, [rec["r"] * d for rec in records], thetas, pivot)
    for rec, tail in zip(records, C.tail):
        rec["C_tail"] = tail
    denoms = np.array([rec["denominator"] for rec in records])
    tail_count = math.ceil(len(records) / 3)
    # divergence proxy: strictly increasing, and still growing by >= 10% over the tail
    head = denoms[-tail_count - 1] if len(denoms) > tail_count else denoms[0]
    growing = bool(
        np.all(denoms > 0) and np.all(np.diff(denoms) > 0) and denoms[-1] >= DIVERGENCE_FACTOR * head
    )
    if C.vanishing:
        bound, kind = float(N + 1), "N+1"
    else:
        bound, kind = float((C.C + 1) * N + 1), "(C+1)N+1"
    ratios = np.array([rec["ratio"] for rec in records])
    limsup = float(np.max(ratios[-tail_count:])) if growing else math.nan
    if not growing:
        verdict = "hypotheses not met"
    elif limsup <= bound * (1 + tol):
        verdict = "consistent"
    else:
        verdict = "inconsistent"
    return GrowthVerdict(verdict, limsup, bound, kind, C.C, C.vanishing, N, records, pivot, tail_count)


def sheremeta_gap(N: int, C) -> tuple:
    """``(NC + N + 1, (C + 1)(N + 1), gap)`` in exact rational arithmetic.

    The gap equals ``C`` for every ``N``, so the first bound is strictly
    smaller exactly when ``C > 0``.  Float input gives float output.
    """
    if N < 0 or C < 0:
        raise ValueError("need N >= 0 and C >= 0")
    c = Fraction(C)
    new = N * c + N + 1
    old = (c + 1) * (N + 1)
    gap = old - new
    as_float = float if isinstance(C, float) else (lambda x: x)
    return as_float(new), as_float(old), as_float(gap)


@dataclass
class ConvexityReport:
    log_r: list
    values: np.ndarray  # ln^+ M on the lattice
    min_second_difference: list  # per axis
    passes: bool
    slack: float


def convexity_check(
    f: EntireFunction,
    r_min,
    r_max,
    points: int = 16,
    grid: GridSpec = GridSpec(),
    slack: float = 1e-9,
) -> ConvexityReport:
    """Second differences of ``ln^+ M`` along each ``ln r_j`` axis of a lattice."""
    n = f.arity
    lo = as_radius(np.broadcast_to(r_min, (n,)), n)
    hi = as_radius(np.broadcast_to(r_max, (n,)), n)
    if np.any(lo <= 0) or np.any(hi <= lo):
        raise ValueError("need 0 < r_min < r_max")
    axes = [np.linspace(np.log(lo[j]), np.log(hi[j]), points) for j in range(n)]
    values = np.empty((points,) * n)
    for idx in itertools.product(range(points), repeat=n):
        R = np.exp([axes[j][idx[j]] for j in range(n)])
        values[idx] = max(log_max_modulus(f, R, grid).log_value, 0.0)
    mins = []
    for j in range(n):
        second = np.diff(values, n=2, axis=j)
        mins.append(float(second.min()) if second.size else math.inf)
    return ConvexityReport(
        log_r=[a.tolist() for a in axes],
        values=values,
        min_second_difference=mins,
        passes=bool(min(mins) >= -slack),
        slack=slack,
    )


def r0_sensitivity(
    f: EntireFunction,
    L: WeightVector,
    direction,
    r_seq: Sequence[float],
    factors: Sequence[float] = (0.5, 1.0, 2.0, 4.0),
    cfg: Thm2Config = Thm2Config(),
    grid: GridSpec = GridSpec(),
) -> list[dict]:
    """Minimized-integral ratio scans for base radii ``R0 = factor * 1``."""
    out = []
    for factor in factors:
        c = Thm2Config(
            R0=tuple([float(factor)] * f.arity),
            theta_resolution=cfg.theta_resolution,
            permutations=cfg.permutations,
            mode=cfg.mode,
            seed=cfg.seed,
            rtol=cfg.rtol,
        )
        scan = thm2_ratio_scan(f, L, direction, r_seq, c, grid)
        out.append({"R0_factor": float(factor), "consistent": scan.consistent, "records": scan.records})
    return out
