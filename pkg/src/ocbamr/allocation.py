"""Closed-form optimal allocations and support-design locations.

All allocations here are budget fractions; turning them into replication
counts is the job of :mod:`ocbamr.policies`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design_space import SupportTrio, nearest_design, rho_coeffs
from .metamodel import inverse_weight_sum


class DegenerateComparisonError(ValueError):
    """All node weights of a comparison vanish."""


@dataclass(frozen=True)
class TrioAllocation:
    alphas: np.ndarray
    trio: SupportTrio | None = None

    def __post_init__(self):
        a = np.asarray(self.alphas, dtype=float)
        if a.shape != (3,) or np.any(a < 0) or abs(a.sum() - 1.0) > 1e-12:
            raise ValueError(f"trio allocation must be 3 nonnegative fractions summing to 1, got {a}")
        a.flags.writeable = False
        object.__setattr__(self, "alphas", a)


@dataclass(frozen=True)
class ThetaAllocation:
    thetas: np.ndarray
    gammas: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.thetas, dtype=float)
        if np.any(t < 0) or abs(t.sum() - 1.0) > 1e-12:
            raise ValueError("partition fractions must be nonnegative and sum to 1")


def _normalized_abs(z) -> np.ndarray:
    z = np.abs(np.asarray(z, dtype=float))
    # weights that vanish analytically come out at rounding level; keep them at zero
    z[z <= 1e-12 * z.max(initial=0.0)] = 0.0
    total = z.sum()
    if total == 0.0:
        raise DegenerateComparisonError("all node weights are zero")
    a = z / total
    # keep the sum exactly 1 for downstream invariants
    a[np.argmax(a)] += 1.0 - a.sum()
    return a


def alpha_star_t1(rho, trio: SupportTrio | None = None) -> TrioAllocation:
    """Rate-maximizing split of one fit's budget over its three nodes."""
    return TrioAllocation(_normalized_abs(rho), trio)


def alpha_star_t3(z, trio: SupportTrio | None = None) -> TrioAllocation:
    """Per-partition split; ``z`` is rho for the reference partition, eta otherwise."""
    return TrioAllocation(_normalized_abs(z), trio)


def support_location_t2(x1: float, xt: float, x_key: float, x_m: float) -> float:
    """Location of the middle support design for the comparison (key, m)."""
    if not x1 < xt:
        raise ValueError("need x1 < xt")
    centre = 0.5 * (x_key + x_m)
    half = 0.5 * (x1 + xt)
    # rounding in the midpoint must not push a flat case onto an endpoint
    if abs(centre - half) <= 1e-12 * max(1.0, abs(x1), abs(xt)):
        return half
    if 0.25 * (3 * x1 + xt) <= centre < half:
        return x_key + x_m - x1
    if half < centre <= 0.25 * (x1 + 3 * xt):
        return x_key + x_m - xt
    return half


def _interior_mid(block_locations, x: float) -> int:
    """Nearest design to x, pushed off the block ends so the trio stays distinct."""
    k = len(block_locations)
    j = nearest_design(block_locations, x)
    return min(max(j, 1), k - 2)


def support_location_t4(block_locations, key: int, m: int | None = None):
    """Middle support design and node split for one partition.

    ``key`` (and ``m`` for the partition holding the m-th best design) are
    local indices into ``block_locations``. Pass ``m=None`` for any other
    partition. Returns ``(x_s, trio, allocation)`` with ``trio`` in local
    indices and ``x_s`` the unrounded target location.
    """
    loc = np.asarray(block_locations, dtype=float)
    k = loc.size
    x1, xk = loc[0], loc[-1]
    if m is None:
        if 0 < key < k - 1:
            trio = SupportTrio(0, key, k - 1)
            return float(loc[key]), trio, TrioAllocation(np.array([0.0, 1.0, 0.0]), trio)
        x_s = 0.5 * (x1 + xk)
        trio = SupportTrio(0, _interior_mid(loc, x_s), k - 1)
        unit = np.array([1.0, 0.0, 0.0]) if key == 0 else np.array([0.0, 0.0, 1.0])
        return float(x_s), trio, TrioAllocation(unit, trio)

    x_s = support_location_t2(x1, xk, loc[key], loc[m])
    trio = SupportTrio(0, _interior_mid(loc, x_s), k - 1)
    rho = rho_coeffs(loc[list(trio)], loc[m], loc[key])
    try:
        alloc = alpha_star_t3(rho, trio)
    except DegenerateComparisonError:
        alloc = TrioAllocation(np.full(3, 1.0 / 3.0), trio)
    return float(x_s), trio, alloc


def reference_factor(eta_m, alphas_b) -> float:
    """sum_r eta_r^2 / alpha_r for the m-th best design in its own partition."""
    return float(inverse_weight_sum(eta_m, alphas_b))


def theta_star_t5(gaps, sigma2, b: int, eta_mb=None, alphas_b=None, *,
                  b_factor: float | None = None, gap_floor: float = 0.0) -> ThetaAllocation:
    """Budget fractions across partitions.

    ``gaps[h]`` is f(m_b) - f(key of partition h); entry ``b`` is ignored.
    ``sigma2[h]`` are the partition noise variances. The reference partition's
    weight needs either ``b_factor`` or ``(eta_mb, alphas_b)``; an infinite
    factor sends the whole budget to partition ``b``. Gaps smaller than
    ``gap_floor`` in magnitude are raised to it.
    """
    gaps = np.asarray(gaps, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    l = gaps.size
    if l == 1:
        return ThetaAllocation(np.ones(1), np.ones(1))
    others = np.arange(l) != b
    g2 = np.maximum(gaps[others] ** 2, gap_floor ** 2)
    if np.any(g2 == 0.0):
        raise ValueError("zero gap to a key design; supply gap_floor")
    gam = np.empty(l)
    gam[others] = sigma2[others] / g2
    if b_factor is None:
        b_factor = reference_factor(eta_mb, alphas_b)
    if np.isinf(b_factor):
        # the reference prediction needs a node its own split leaves empty
        gam[b] = np.inf
        theta = np.zeros(l)
        theta[b] = 1.0
        return ThetaAllocation(theta, gam)
    gam[b] = np.sqrt(sigma2[b] * b_factor * np.sum(gam[others] ** 2 / sigma2[others]))
    theta = gam / gam.sum()
    theta[np.argmax(theta)] += 1.0 - theta.sum()
    return ThetaAllocation(theta, gam)
