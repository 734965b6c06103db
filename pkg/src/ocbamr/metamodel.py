"""Quadratic least-squares metamodel and variances of predicted differences."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .design_space import lagrange_eta, rho_coeffs

COND_LIMIT = 1e12


class RankDeficientError(ValueError):
    """Fewer than three distinct simulated locations."""


class InsufficientDataError(ValueError):
    """Not enough rows to leave a residual degree of freedom."""


class SampleStore:
    """Per-design replication counts, running means and centred sums of squares.

    Raw outputs are kept as appended chunks so that ``values(i)`` returns every
    sample ever drawn for design ``i``.
    """

    def __init__(self, n_designs: int):
        self.counts = np.zeros(n_designs, dtype=np.int64)
        self.means = np.zeros(n_designs)
        self.m2 = np.zeros(n_designs)
        self._chunks: list[list[np.ndarray]] = [[] for _ in range(n_designs)]

    @property
    def n_designs(self) -> int:
        return self.counts.size

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def add(self, index: int, values) -> None:
        values = np.atleast_1d(np.asarray(values, dtype=float))
        k = values.size
        if k == 0:
            return
        n = self.counts[index]
        mean_b = values.mean()
        m2_b = float(((values - mean_b) ** 2).sum())
        delta = mean_b - self.means[index]
        tot = n + k
        # Chan et al. pairwise combination
        self.means[index] += delta * k / tot
        self.m2[index] += m2_b + delta * delta * n * k / tot
        self.counts[index] = tot
        self._chunks[index].append(values)

    def values(self, index: int) -> np.ndarray:
        chunks = self._chunks[index]
        return np.concatenate(chunks) if chunks else np.empty(0)

    def sample_means(self) -> np.ndarray:
        """Raw per-design means; unsampled designs get +inf."""
        out = np.full(self.n_designs, np.inf)
        seen = self.counts > 0
        out[seen] = self.means[seen]
        return out


def design_row(x):
    """Regression row(s) (1, x, x^2)."""
    x = np.asarray(x, dtype=float)
    return np.stack([np.ones_like(x), x, x * x], axis=-1)


@dataclass(frozen=True)
class QuadraticFit:
    beta: np.ndarray
    sigma2_hat: float
    info_matrix: np.ndarray
    n_rows: int

    def predict(self, x):
        return predict(self, x)

    @property
    def inv_info(self) -> np.ndarray:
        return linalg.cho_solve(linalg.cho_factor(self.info_matrix), np.eye(3))

    def prediction_variance(self, x, sigma2: float | None = None):
        """sigma^2 * X_i^T (X^T X)^{-1} X_i for each location in ``x``."""
        s2 = self.sigma2_hat if sigma2 is None else sigma2
        v = design_row(x)
        return s2 * np.einsum("...i,ij,...j->...", v, self.inv_info, v)

    def diff_variance(self, xi, xj, sigma2: float | None = None):
        """Matrix-form variance of f_hat(xi) - f_hat(xj)."""
        s2 = self.sigma2_hat if sigma2 is None else sigma2
        d = design_row(xi) - design_row(xj)
        return s2 * np.einsum("...i,ij,...j->...", d, self.inv_info, d)


def _solve_normal(ata: np.ndarray, aty: np.ndarray) -> np.ndarray:
    return linalg.cho_solve(linalg.cho_factor(ata), aty)


def fit_ols(store: SampleStore, locations, indices=None) -> QuadraticFit:
    """OLS quadratic fit over the designs ``indices`` (default: all).

    ``locations[i]`` is the scalar regressor of design ``i``. The fit uses the
    per-design sufficient statistics, which reproduce the row-level normal
    equations exactly.
    """
    locations = np.asarray(locations, dtype=float)
    if indices is None:
        indices = np.arange(store.n_designs)
    indices = np.asarray(indices)
    n = store.counts[indices].astype(float)
    used = n > 0
    x = locations[indices][used]
    n = n[used]
    ybar = store.means[indices][used]
    m2 = store.m2[indices][used]
    if np.unique(x).size < 3:
        raise RankDeficientError("need samples at three distinct locations")
    n_rows = int(n.sum())
    if n_rows <= 3:
        raise InsufficientDataError("need more than three rows for a residual variance")

    V = design_row(x)
    ata = (V * n[:, None]).T @ V
    aty = V.T @ (n * ybar)
    if np.linalg.cond(ata) <= COND_LIMIT:
        beta = _solve_normal(ata, aty)
    else:
        # refit on x mapped to [-1, 1], then map coefficients back
        c = 0.5 * (x.max() + x.min())
        s = 0.5 * (x.max() - x.min())
        U = design_row((x - c) / s)
        b0, b1, b2 = _solve_normal((U * n[:, None]).T @ U, U.T @ (n * ybar))
        beta = np.array([
            b0 - b1 * c / s + b2 * c * c / (s * s),
            b1 / s - 2.0 * b2 * c / (s * s),
            b2 / (s * s),
        ])
    resid = ybar - V @ beta
    rss = float(m2.sum() + (n * resid * resid).sum())
    sigma2 = max(rss, 0.0) / (n_rows - 3)
    ata.flags.writeable = False
    beta.flags.writeable = False
    return QuadraticFit(beta=beta, sigma2_hat=sigma2, info_matrix=ata, n_rows=n_rows)


def predict(fit: QuadraticFit, x):
    b0, b1, b2 = fit.beta
    x = np.asarray(x, dtype=float)
    return b0 + b1 * x + b2 * x * x


def inverse_weight_sum(w, a):
    """sum_r w_r^2 / a_r with 0/0 -> 0 and w/0 -> +inf (last axis)."""
    w = np.asarray(w, dtype=float)
    a = np.broadcast_to(np.asarray(a, dtype=float), w.shape)
    w2 = w * w
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(w2 == 0.0, 0.0, w2 / a)
    terms = np.where((a <= 0.0) & (w2 != 0.0), np.inf, terms)
    return terms.sum(axis=-1)


def diff_var_within(sigma2, alloc, trio_locations, xi, xj, n: float = 1.0):
    """Variance of f_hat(xi) - f_hat(xj) when only the trio is simulated.

    ``alloc`` holds either budget fractions (then pass the total ``n``) or raw
    counts (leave ``n=1``). Returns +inf when a node with non-zero weight has
    no allocation.
    """
    rho = rho_coeffs(trio_locations, xi, xj)
    return sigma2 / n * inverse_weight_sum(rho, alloc)


def node_variance(sigma2, theta, alloc, trio_locations, x, n: float = 1.0):
    """Prediction variance at x for one partition simulated only at its trio."""
    eta = lagrange_eta(trio_locations, x)
    return sigma2 / (theta * n) * inverse_weight_sum(eta, alloc)


def diff_var_cross(sigma2_h, theta_h, alloc_h, trio_h, x_ih,
                   sigma2_g, theta_g, alloc_g, trio_g, x_jg, n: float = 1.0):
    """Variance of f_hat(x_ih) - f_hat(x_jg) for designs in different partitions.

    The two partitions are fitted on independent samples, so the variances of
    the two predictions add.
    """
    return (node_variance(sigma2_h, theta_h, alloc_h, trio_h, x_ih, n)
            + node_variance(sigma2_g, theta_g, alloc_g, trio_g, x_jg, n))
