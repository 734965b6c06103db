"""Design grids, partitions and the quadratic interpolation geometry.

Every design has a scalar location inside its partition. For one-dimensional
problems the flat location array is globally increasing; for the row-wise
partitioning of a two-dimensional grid it only increases within each block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class DegenerateGeometryError(ValueError):
    """Raised when interpolation nodes coincide."""


@dataclass(frozen=True)
class DesignSpace:
    """Ordered design locations x_1 < ... < x_t."""

    locations: np.ndarray

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float).copy()
        if loc.ndim != 1 or loc.size < 3:
            raise ValueError("a design space needs at least 3 locations")
        if not np.all(np.isfinite(loc)):
            raise ValueError("locations must be finite")
        if np.any(np.diff(loc) <= 0):
            raise ValueError("locations must be strictly increasing")
        loc.flags.writeable = False
        object.__setattr__(self, "locations", loc)

    @property
    def size(self) -> int:
        return self.locations.size

    def __len__(self):
        return self.locations.size

    @classmethod
    def uniform(cls, start: float, stop: float, count: int, first: int = 0) -> "DesignSpace":
        """Grid ``start + k*(stop-start)/count`` for ``k = first .. first+count-1``.

        With ``first=0`` the right endpoint is excluded; ``first=1`` excludes
        the left one instead.
        """
        k = np.arange(first, first + count, dtype=float)
        return cls(start + (stop - start) * k / count)

    def nearest(self, x: float) -> int:
        return nearest_design(self.locations, x)


@dataclass(frozen=True)
class PartitionedSpace:
    """Designs split into contiguous blocks, each modelled by its own quadratic.

    ``locations`` is the flat per-design scalar used by the regression of the
    design's block. ``coords`` optionally carries the full (possibly
    multi-dimensional) coordinates for reporting.
    """

    locations: np.ndarray
    bounds: tuple[tuple[int, int], ...]
    coords: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float).copy()
        loc.flags.writeable = False
        object.__setattr__(self, "locations", loc)
        bounds = tuple((int(a), int(b)) for a, b in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if not bounds:
            raise ValueError("at least one partition is required")
        expected = 0
        for start, stop in bounds:
            if start != expected or stop <= start:
                raise ValueError("partitions must be contiguous, ordered and cover all designs")
            if stop - start < 3:
                raise ValueError("each partition needs at least 3 designs")
            # validates monotonicity within the block
            DesignSpace(loc[start:stop])
            expected = stop
        if expected != loc.size:
            raise ValueError("partitions must cover all designs")
        if self.coords is None:
            object.__setattr__(self, "coords", loc.reshape(-1, 1))
        else:
            coords = np.asarray(self.coords, dtype=float)
            if coords.ndim == 1:
                coords = coords.reshape(-1, 1)
            if coords.shape[0] != loc.size:
                raise ValueError("coords must have one row per design")
            object.__setattr__(self, "coords", coords)
        part_of = np.empty(loc.size, dtype=int)
        for h, (start, stop) in enumerate(bounds):
            part_of[start:stop] = h
        part_of.flags.writeable = False
        object.__setattr__(self, "_part_of", part_of)

    @classmethod
    def from_space(cls, space: DesignSpace, sizes: Sequence[int] | int) -> "PartitionedSpace":
        """Split ``space`` into blocks; an int means that many equal blocks."""
        t = space.size
        if isinstance(sizes, (int, np.integer)):
            if t % sizes:
                raise ValueError(f"{t} designs do not split into {sizes} equal partitions")
            sizes = [t // int(sizes)] * int(sizes)
        edges = np.concatenate([[0], np.cumsum(sizes)])
        return cls(space.locations, tuple(zip(edges[:-1], edges[1:])))

    @classmethod
    def single(cls, space: DesignSpace) -> "PartitionedSpace":
        return cls(space.locations, ((0, space.size),))

    @property
    def size(self) -> int:
        return self.locations.size

    @property
    def n_partitions(self) -> int:
        return len(self.bounds)

    @property
    def is_monotone(self) -> bool:
        """True when the flat locations increase across the whole space."""
        return bool(np.all(np.diff(self.locations) > 0))

    def partition_of(self, index: int) -> int:
        return int(self._part_of[index])

    @property
    def partition_index(self) -> np.ndarray:
        return self._part_of

    def block(self, h: int) -> DesignSpace:
        start, stop = self.bounds[h]
        return DesignSpace(self.locations[start:stop])

    def merged(self) -> "PartitionedSpace":
        """The same designs as a single partition (requires global ordering)."""
        if not self.is_monotone:
            raise ValueError("designs are not ordered along one axis; cannot merge partitions")
        return PartitionedSpace(self.locations, ((0, self.size),), self.coords)


@dataclass(frozen=True)
class SupportTrio:
    """Global design indices of the three support designs of one block."""

    lo: int
    mid: int
    hi: int

    def __post_init__(self):
        if not self.lo < self.mid < self.hi:
            raise ValueError(f"support trio must satisfy lo < mid < hi, got {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.lo, self.mid, self.hi)

    def __iter__(self):
        return iter(self.as_tuple())


def _check_trio(trio) -> tuple[float, float, float]:
    x1, xs, xt = (float(v) for v in trio)
    if x1 == xs or x1 == xt or xs == xt:
        raise DegenerateGeometryError(f"trio locations must be distinct, got {(x1, xs, xt)}")
    return x1, xs, xt


def lagrange_eta(trio, x):
    """Lagrange basis weights of the three nodes evaluated at ``x``.

    Returns an array whose last axis has length 3 (``x`` may be an array).
    """
    x1, xs, xt = _check_trio(trio)
    x = np.asarray(x, dtype=float)
    eta1 = (xs - x) * (xt - x) / ((x1 - xs) * (x1 - xt))
    etas = (x1 - x) * (xt - x) / ((xs - x1) * (xs - xt))
    etat = (x1 - x) * (xs - x) / ((xt - x1) * (xt - xs))
    return np.stack([eta1, etas, etat], axis=-1)


def rho_coeffs(trio, xi, xj):
    """Node weights of the predicted difference f(xi) - f(xj)."""
    x1, xs, xt = _check_trio(trio)
    xi = np.asarray(xi, dtype=float)
    xj = np.asarray(xj, dtype=float)
    rho1 = ((xs - xi) * (xt - xi) - (xs - xj) * (xt - xj)) / ((x1 - xs) * (x1 - xt))
    rhos = ((x1 - xi) * (xt - xi) - (x1 - xj) * (xt - xj)) / ((xs - x1) * (xs - xt))
    rhot = ((x1 - xi) * (xs - xi) - (x1 - xj) * (xs - xj)) / ((xt - x1) * (xt - xs))
    return np.stack(np.broadcast_arrays(rho1, rhos, rhot), axis=-1)


def nearest_design(locations, x: float) -> int:
    """Index of the location closest to ``x``; ties go to the lower index."""
    if not np.isfinite(x):
        raise ValueError("x must be finite")
    dist = np.abs(np.asarray(locations, dtype=float) - x)
    best = dist.min()
    # grid arithmetic leaves ~1 ulp noise on exact midpoints
    tol = 1e-9 * max(1.0, abs(x), float(np.max(np.abs(locations))))
    return int(np.flatnonzero(dist <= best + tol)[0])


def d_optimal_trio(start: int, stop: int) -> SupportTrio:
    """Endpoints plus the (rounded-down) middle design of block [start, stop)."""
    k = stop - start
    return SupportTrio(start, start + (k - 1) // 2, stop - 1)
