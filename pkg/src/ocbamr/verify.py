"""Oracle-based optimality checks for the closed-form allocation rules.

Each check compares an analytic rule against a brute-force computation that
does not go through the rule itself (simplex or line grid search, finite
differences, importance-sampled Monte Carlo) and returns a
:class:`CheckResult` carrying the worst residual seen.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .allocation import alpha_star_t1, reference_factor, support_location_t2, support_location_t4, theta_star_t5
from .design_space import lagrange_eta, rho_coeffs
from .rate import rate_cross, rate_single, rate_tilde


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    instances: int
    seconds: float
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" {self.detail}" if self.detail else ""
        return (f"{tag} {self.name}: residual={self.residual:.3e} tol={self.tolerance:.1e} "
                f"instances={self.instances} time={self.seconds:.2f}s{extra}")


def simplex_grid(step: float = 0.01) -> np.ndarray:
    """All (a1, a2, a3) on the probability simplex with spacing ``step``."""
    k = int(round(1.0 / step))
    i, j = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
    keep = i + j <= k
    i, j = i[keep], j[keep]
    return np.column_stack([i, j, k - i - j]) / k


def _vandermonde_eta(nodes, x):
    """Lagrange weights from solving the 3x3 interpolation system directly."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.broadcast_to(np.asarray(x, dtype=float), nodes.shape[:-1])
    V = np.stack([np.ones_like(nodes), nodes, nodes ** 2], axis=-2)
    rhs = np.stack([np.ones_like(x), x, x * x], axis=-1)
    return np.linalg.solve(V, rhs[..., None])[..., 0]


def _grid_rates(gap, sigma2, rho, grid):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(rho ** 2 == 0.0, 0.0, rho ** 2 / grid)
    return 0.5 * gap * gap / (sigma2 * terms.sum(axis=1))


def check_single_fit_weights(n_instances: int = 200, step: float = 0.01, tol: float = 1e-9, seed: int = 1) -> CheckResult:
    """Rate at the |rho|-proportional split is at least the simplex-grid maximum."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    grid = simplex_grid(step)
    worst = -np.inf
    for _ in range(n_instances):
        nodes = np.sort(rng.uniform(0.0, 10.0, 3))
        while np.min(np.diff(nodes)) < 0.5:
            nodes = np.sort(rng.uniform(0.0, 10.0, 3))
        xi, xj = rng.uniform(nodes[0], nodes[2], 2)
        gap = rng.uniform(0.1, 2.0)
        sigma2 = rng.uniform(0.5, 2.0)
        rho = rho_coeffs(nodes, xi, xj)
        best_grid = _grid_rates(gap, sigma2, rho, grid).max()
        analytic = rate_single(gap, sigma2, rho, alpha_star_t1(rho).alphas)
        worst = max(worst, best_grid - analytic)
    return CheckResult("single_fit_weights", bool(worst <= tol), float(max(worst, 0.0)), tol,
                       n_instances, time.perf_counter() - t0)


SUPPORT_CASES = ("I", "II", "III", "IV", "V")


def _case_centre(case: str, x1: float, xt: float, rng) -> float:
    q1, half, q3 = 0.25 * (3 * x1 + xt), 0.5 * (x1 + xt), 0.25 * (x1 + 3 * xt)
    lo, hi = {"I": (x1, q1), "II": (q1, half), "III": (q3, xt), "IV": (half, q3), "V": (half, half)}[case]
    # stay clear of the case boundaries so the instance is unambiguous
    pad = 0.02 * (hi - lo)
    return float(rng.uniform(lo + pad, hi - pad)) if hi > lo else lo


def support_instance(case: str, rng):
    """(x1, xt, x_key, x_m) whose midpoint falls in the given proof case."""
    x1 = rng.uniform(-5.0, 5.0)
    xt = x1 + rng.uniform(1.0, 10.0)
    c = _case_centre(case, x1, xt, rng)
    reach = min(c - x1, xt - c)
    d = rng.uniform(0.05, 0.95) * reach
    if rng.random() < 0.5:
        d = -d
    return x1, xt, c + d, c - d


def support_objective(x1, xt, x_key, x_m, xs):
    """Rate (up to the gap^2 / 2 sigma^2 factor) after the optimal node split."""
    xs = np.asarray(xs, dtype=float)
    nodes = np.stack([np.full_like(xs, x1), xs, np.full_like(xs, xt)], axis=-1)
    rho = _vandermonde_eta(nodes, x_m) - _vandermonde_eta(nodes, x_key)
    return 1.0 / np.abs(rho).sum(axis=-1) ** 2


def check_support_location(n_per_case: int = 50, rel_step: float = 1e-3, seed: int = 2) -> CheckResult:
    """Analytic middle-node location against a line search over the open interval."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    n_grid = int(round(1.0 / rel_step))
    worst_steps = 0.0
    worst_flat = 0.0
    failures = []
    for case in SUPPORT_CASES:
        for _ in range(n_per_case):
            x1, xt, xk, xm = support_instance(case, rng)
            h = rel_step * (xt - x1)
            grid = x1 + h * np.arange(1, n_grid)
            obj = support_objective(x1, xt, xk, xm, grid)
            xs = support_location_t2(x1, xt, xk, xm)
            if case == "V":
                # flat objective: any location is optimal, compare values instead
                val = support_objective(x1, xt, xk, xm, np.array([xs]))[0]
                res = abs(obj.max() - val) / obj.max()
                worst_flat = max(worst_flat, res)
                if res > 1e-9:
                    failures.append(case)
            else:
                off = abs(grid[np.argmax(obj)] - xs) / h
                worst_steps = max(worst_steps, off)
                if off > 1.0 + 1e-9:
                    failures.append(case)
    detail = f"max_offset={worst_steps:.3f}steps flat_rel={worst_flat:.1e}"
    if failures:
        detail += f" failing_cases={sorted(set(failures))}"
    return CheckResult("support_location", not failures, worst_steps, 1.0,
                       n_per_case * len(SUPPORT_CASES), time.perf_counter() - t0, detail)


@dataclass
class SplitInstance:
    gaps: np.ndarray
    sigma2: np.ndarray
    b: int
    eta: list  # eta of the compared design per partition (m_b for partition b)
    alphas: list

    @property
    def b_factor(self) -> float:
        return reference_factor(self.eta[self.b], self.alphas[self.b])


def split_instance(l: int, rng) -> SplitInstance:
    """Random partitions with optimal node splits and a finite reference factor."""
    b = int(rng.integers(l))
    gaps = rng.uniform(0.2, 3.0, l) * rng.choice([-1.0, 1.0], l)
    sigma2 = rng.uniform(0.25, 4.0, l)
    eta, alphas = [], []
    for h in range(l):
        while True:
            k = int(rng.integers(5, 16))
            loc = np.sort(rng.uniform(0.0, 10.0, k))
            if np.min(np.diff(loc)) < 1e-3:
                continue
            key = int(rng.integers(k))
            if h != b:
                _, trio, alloc = support_location_t4(loc, key)
                e = lagrange_eta(loc[list(trio)], loc[key])
                break
            m = int(rng.integers(k))
            if m == key:
                continue
            _, trio, alloc = support_location_t4(loc, key, m)
            e = lagrange_eta(loc[list(trio)], loc[m])
            if np.isfinite(reference_factor(e, alloc.alphas)):
                break
        eta.append(e)
        alphas.append(alloc.alphas)
    return SplitInstance(gaps, sigma2, b, eta, alphas)


def _cross_rate(inst: SplitInstance, theta: np.ndarray, h: int) -> float:
    b = inst.b
    return rate_cross(inst.gaps[h], inst.sigma2[b], inst.sigma2[h], theta[b], theta[h],
                      inst.eta[b], inst.eta[h], inst.alphas[b], inst.alphas[h])


def split_residuals(inst: SplitInstance, rel_step: float = 1e-5) -> tuple[float, float]:
    """(relative spread of the reduced rates, |sum of derivative ratios - 1|)."""
    theta = theta_star_t5(inst.gaps, inst.sigma2, inst.b, inst.eta[inst.b], inst.alphas[inst.b]).thetas
    b = inst.b
    others = [h for h in range(theta.size) if h != b]
    tilde = np.array([rate_tilde(inst.gaps[h], inst.sigma2[h], theta[h], inst.eta[h], inst.alphas[h])
                      for h in others])
    spread = float((tilde.max() - tilde.min()) / tilde.max())

    def partial(h, wrt):
        e = rel_step * theta[wrt]
        up, dn = theta.copy(), theta.copy()
        up[wrt] += e
        dn[wrt] -= e
        return (_cross_rate(inst, up, h) - _cross_rate(inst, dn, h)) / (2 * e)

    total = sum(partial(h, b) / partial(h, h) for h in others)
    return spread, float(abs(total - 1.0))


def check_partition_split(n_instances: int = 100, tol: float = 1e-6, seed: int = 5) -> CheckResult:
    """Stationarity of the partition split: equal reduced rates and total balance."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst_spread = worst_balance = 0.0
    for _ in range(n_instances):
        inst = split_instance(int(rng.integers(3, 9)), rng)
        spread, balance = split_residuals(inst)
        worst_spread = max(worst_spread, spread)
        worst_balance = max(worst_balance, balance)
    ok = worst_spread <= tol and worst_balance <= tol
    return CheckResult("partition_split", bool(ok), max(worst_spread, worst_balance), tol, n_instances,
                       time.perf_counter() - t0,
                       f"rate_spread={worst_spread:.1e} balance={worst_balance:.1e}")


@dataclass(frozen=True)
class RateInstance:
    """Two designs under one quadratic fit with f(x) = curvature * x^2."""

    nodes: tuple = (0.0, 5.0, 10.0)
    x_m: float = 2.0
    x_i: float = 4.5
    curvature: float = 0.0047
    sigma2: float = 1.0

    @property
    def rho(self) -> np.ndarray:
        return rho_coeffs(self.nodes, self.x_m, self.x_i)

    @property
    def alphas(self) -> np.ndarray:
        return alpha_star_t1(self.rho).alphas

    @property
    def gap(self) -> float:
        return self.curvature * (self.x_i ** 2 - self.x_m ** 2)

    @property
    def rate(self) -> float:
        return rate_single(self.gap, self.sigma2, self.rho, self.alphas)


def empirical_rate(inst: RateInstance, n: int, n_sims: int, rng) -> tuple[float, float]:
    """-log(P_hat)/n for P{fitted f(x_m) > fitted f(x_i)} with a budget of n.

    Node means are drawn from their exact sampling law given n * alpha_r
    replications per node. The draws are exponentially tilted so that the
    misordering becomes a typical event; likelihood ratios undo the tilt.
    Returns the rate estimate and the relative standard error of P_hat.
    """
    nodes = np.asarray(inst.nodes, dtype=float)
    mu = inst.curvature * nodes ** 2
    rho, a = inst.rho, inst.alphas
    active = a > 0
    s2 = np.where(active, inst.sigma2 / (np.where(active, a, 1.0) * n), 0.0)
    # shift d_hat = sum rho * ybar from mean -gap to mean 0
    delta = inst.gap * rho * s2 / np.sum(rho ** 2 * s2)
    z = rng.standard_normal((n_sims, 3))
    y = mu + delta + np.sqrt(s2) * z
    d_hat = y @ rho
    with np.errstate(divide="ignore", invalid="ignore"):
        log_w = np.where(active, (-2.0 * (y - mu) * delta + delta ** 2) / (2.0 * np.where(active, s2, 1.0)), 0.0)
    w = np.exp(log_w.sum(axis=1)) * (d_hat > 0)
    p = w.mean()
    rel_se = w.std(ddof=1) / np.sqrt(n_sims) / p
    return float(-np.log(p) / n), float(rel_se)


def check_ld_rate(n_sims: int = 1_000_000, budgets=(100, 1_000, 10_000), tol: float = 0.15,
                      seed: int = 7) -> CheckResult:
    """Simulated misordering probability decays at the predicted exponential rate."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    inst = RateInstance()
    ratios = []
    for n in budgets:
        r_hat, _ = empirical_rate(inst, n, n_sims, rng)
        ratios.append(r_hat / inst.rate)
    res = abs(ratios[-1] - 1.0)
    detail = "ratios=" + ",".join(f"n={n}:{q:.3f}" for n, q in zip(budgets, ratios)) + f" rate={inst.rate:.4e}"
    return CheckResult("ld_rate", bool(res <= tol), res, tol, n_sims,
                       time.perf_counter() - t0, detail)


CHECKS = {
    "weights": check_single_fit_weights,
    "support": check_support_location,
    "partition": check_partition_split,
    "ld-rate": check_ld_rate,
}


def run_all(names=None) -> list[CheckResult]:
    names = list(CHECKS) if names is None else list(names)
    return [CHECKS[n]() for n in names]
