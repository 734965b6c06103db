"""Large-deviations rates of pairwise misordering and the key design."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design_space import rho_coeffs
from .metamodel import inverse_weight_sum


def _rate(gap, denom):
    gap = np.asarray(gap, dtype=float)
    denom = np.asarray(denom, dtype=float)
    num = 0.5 * gap * gap
    with np.errstate(divide="ignore", invalid="ignore"):
        r = num / denom
    # zero gap or unbounded variance: the comparison is a coin flip
    r = np.where((num == 0.0) | np.isinf(denom), 0.0, r)
    r = np.where((denom == 0.0) & (num > 0.0), np.inf, r)
    return r if r.ndim else float(r)


def rate_from_variance(gap, variance):
    """gap^2 / (2 variance), with the zero-gap and infinite-variance conventions."""
    return _rate(gap, variance)


def rate_single(gap, sigma2, rho, alphas):
    """Rate of P{misorder of two designs} sharing one quadratic fit."""
    return _rate(gap, sigma2 * inverse_weight_sum(rho, alphas))


def rate_cross(gap, sigma2_b, sigma2_h, theta_b, theta_h, eta_b, eta_h, alphas_b, alphas_h):
    """Rate for a design of partition h against the reference design of partition b."""
    with np.errstate(divide="ignore"):
        term_b = sigma2_b / np.asarray(theta_b, dtype=float) * inverse_weight_sum(eta_b, alphas_b)
        term_h = sigma2_h / np.asarray(theta_h, dtype=float) * inverse_weight_sum(eta_h, alphas_h)
    return _rate(gap, term_b + term_h)


def rate_tilde(gap, sigma2_h, theta_h, eta_h, alphas_h):
    """``rate_cross`` once the reference partition's variance term has vanished."""
    with np.errstate(divide="ignore"):
        term_h = sigma2_h / np.asarray(theta_h, dtype=float) * inverse_weight_sum(eta_h, alphas_h)
    return _rate(gap, term_h)


def pfs_rate(rates, m_index: int | None = None) -> float:
    """Slowest comparison rate; the reference design itself is skipped."""
    rates = np.asarray(rates, dtype=float)
    if m_index is not None:
        rates = np.delete(rates, m_index)
    return float(rates.min())


def argmin_excluding(values, exclude=None) -> int:
    """Lowest index attaining the minimum, skipping ``exclude``."""
    v = np.array(values, dtype=float)
    if exclude is not None:
        v[exclude] = np.nan
    return int(np.nanargmin(v))


def identify(predictions, m: int):
    """Observed top-m set and the design with the m-th smallest prediction.

    Returns ``(m_index, selected, rest)``; ties are resolved toward the lower
    index.
    """
    pred = np.asarray(predictions, dtype=float)
    if not 1 <= m < pred.size:
        raise ValueError("m must satisfy 1 <= m < number of designs")
    order = np.argsort(pred, kind="stable")
    selected = np.sort(order[:m])
    rest = np.sort(order[m:])
    return int(order[m - 1]), selected, rest


@dataclass
class RateReport:
    m_index: int
    rates: np.ndarray
    key_index: int
    b_index: int = 0
    key_by_partition: dict[int, int] = field(default_factory=dict)

    @property
    def pfs_rate(self) -> float:
        return pfs_rate(self.rates, self.m_index)


def single_fit_report(predictions, m: int, sigma2: float, trio_locations, alphas, locations) -> RateReport:
    """Rates of every design against the m-th best under one quadratic fit."""
    m_index, _, _ = identify(predictions, m)
    pred = np.asarray(predictions, dtype=float)
    rho = rho_coeffs(trio_locations, locations[m_index], np.asarray(locations, dtype=float))
    rates = np.asarray(rate_single(pred[m_index] - pred, sigma2, rho, alphas), dtype=float)
    rates[m_index] = np.inf
    return RateReport(m_index=m_index, rates=rates, key_index=argmin_excluding(rates, m_index))
