"""Multi-indices, points of C^n, polydiscs and their skeletons.

Points are plain complex numpy arrays of shape ``(n,)``; batches of points
have shape ``(count, n)``.  Radii are real arrays of shape ``(n,)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

DEFAULT_SAMPLE_CAP = 10**6
MAX_FACTORIAL_NORM = 20


class DimensionError(ValueError):
    pass


class SampleCapExceeded(RuntimeError):
    pass


class FactorialOverflow(OverflowError):
    pass


@dataclass(frozen=True)
class MultiIndex:
    """Nonnegative integer exponent vector ``K = (k_1, ..., k_n)``."""

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(k) for k in self.entries)
        if any(k < 0 for k in entries):
            raise ValueError(f"multi-index entries must be >= 0, got {entries}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zeros(cls, n: int) -> MultiIndex:
        return cls((0,) * n)

    @classmethod
    def ones(cls, n: int) -> MultiIndex:
        return cls((1,) * n)

    @classmethod
    def twos(cls, n: int) -> MultiIndex:
        return cls((2,) * n)

    @classmethod
    def basis(cls, j: int, n: int) -> MultiIndex:
        """The unit vector ``e_j`` (1-based ``j``)."""
        if not 1 <= j <= n:
            raise DimensionError(f"basis index {j} out of range 1..{n}")
        return cls(tuple(1 if k == j - 1 else 0 for k in range(n)))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __add__(self, other: MultiIndex) -> MultiIndex:
        if len(other) != len(self):
            raise DimensionError("multi-index lengths differ")
        return MultiIndex(tuple(a + b for a, b in zip(self, other)))

    def __sub__(self, other: MultiIndex) -> MultiIndex:
        if len(other) != len(self):
            raise DimensionError("multi-index lengths differ")
        return MultiIndex(tuple(a - b for a, b in zip(self, other)))

    @property
    def norm(self) -> int:
        return sum(self.entries)

    def factorial(self) -> int:
        if self.norm > MAX_FACTORIAL_NORM:
            raise FactorialOverflow(
                f"factorial of multi-index with norm {self.norm} > {MAX_FACTORIAL_NORM} rejected"
            )
        return math.prod(math.factorial(k) for k in self.entries)

    def power(self, values) -> complex | float:
        """``A^K = a_1^{k_1} ... a_n^{k_n}`` for a length-n vector ``A``."""
        values = np.asarray(values)
        if values.shape[-1] != len(self):
            raise DimensionError("vector length differs from multi-index length")
        out = np.ones(values.shape[:-1], dtype=values.dtype)
        for j, k in enumerate(self.entries):
            if k:
                out = out * values[..., j] ** k
        return out[()] if out.ndim == 0 else out

    def __str__(self) -> str:
        return "(" + ",".join(str(k) for k in self.entries) + ")"


def multi_indices(n: int, max_norm: int) -> list[MultiIndex]:
    """All ``K`` in Z_+^n with ``||K|| <= max_norm``, graded then lexicographic."""
    out = []
    for total in range(max_norm + 1):
        for combo in itertools.product(range(total + 1), repeat=n):
            if sum(combo) == total:
                out.append(MultiIndex(combo))
    return out


def as_point(coords, n: int | None = None) -> np.ndarray:
    z = np.atleast_1d(np.asarray(coords, dtype=complex))
    if z.ndim != 1:
        raise DimensionError(f"a point must be a 1-d sequence, got shape {z.shape}")
    if n is not None and z.shape[0] != n:
        raise DimensionError(f"expected a point in C^{n}, got length {z.shape[0]}")
    if not np.all(np.isfinite(z)):
        raise ValueError(f"point has non-finite coordinates: {z}")
    return z


def as_radius(radii, n: int | None = None) -> np.ndarray:
    r = np.atleast_1d(np.asarray(radii, dtype=float))
    if r.ndim != 1:
        raise DimensionError(f"a radius must be a 1-d sequence, got shape {r.shape}")
    if n is not None and r.shape[0] != n:
        raise DimensionError(f"expected {n} radii, got {r.shape[0]}")
    if np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError(f"radii must be finite and >= 0, got {r}")
    return r


@dataclass(frozen=True)
class GridSpec:
    angular_resolution: int = 64
    radial_resolution: int = 8
    refinement_depth: int = 12
    sample_cap: int = DEFAULT_SAMPLE_CAP

    def __post_init__(self):
        if self.angular_resolution < 2 or self.radial_resolution < 2:
            raise ValueError("grid resolutions must be >= 2")
        if self.refinement_depth < 0:
            raise ValueError("refinement_depth must be >= 0")
        if self.sample_cap < 1:
            raise ValueError("sample_cap must be positive")


def uniform_angles(m: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(m) / m


def _check_cap(count: int, grid: GridSpec):
    if count > grid.sample_cap:
        raise SampleCapExceeded(f"{count} samples requested, cap is {grid.sample_cap}")


def _tensor(axes: Sequence[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def skeleton_samples(center, radius, grid: GridSpec = GridSpec()) -> np.ndarray:
    """Tensor grid on the skeleton ``|z_j - z_j^0| = r_j``, row-major order."""
    c = as_point(center)
    r = as_radius(radius, len(c))
    m = grid.angular_resolution
    _check_cap(m ** len(c), grid)
    unit = np.exp(1j * uniform_angles(m))
    return _tensor([c[j] + r[j] * unit for j in range(len(c))])


def skeleton_angles(n: int, grid: GridSpec = GridSpec()) -> np.ndarray:
    """The angle tuples matching :func:`skeleton_samples` row by row."""
    m = grid.angular_resolution
    _check_cap(m**n, grid)
    return _tensor([uniform_angles(m)] * n)


def polydisc_samples(center, radius, grid: GridSpec = GridSpec()) -> np.ndarray:
    """Radial x angular product grid over the closed polydisc.

    Each coordinate with ``r_j > 0`` contributes ``radial * angular`` values
    (radii ``linspace(0, r_j, radial)``, so the center and the full-radius
    circle are included); a coordinate with ``r_j = 0`` contributes only
    ``z_j^0``.
    """
    c = as_point(center)
    r = as_radius(radius, len(c))
    unit = np.exp(1j * uniform_angles(grid.angular_resolution))
    fractions = np.linspace(0.0, 1.0, grid.radial_resolution)
    axes = []
    for j in range(len(c)):
        if r[j] == 0.0:
            axes.append(np.array([c[j]]))
        else:
            axes.append(c[j] + (r[j] * fractions[:, None] * unit[None, :]).ravel())
    _check_cap(math.prod(len(a) for a in axes), grid)
    return _tensor(axes)
