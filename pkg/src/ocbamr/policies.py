"""Sequential budget allocation: OCBA-mr, OCBA-mrp, their equal-split variant and EA.

Each policy repeatedly refits the metamodel(s), picks key designs with plug-in
rates, places the support designs, and spends the next increment of budget on
the deficits between the new targets and the current counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .allocation import support_location_t4, theta_star_t5
from .design_space import PartitionedSpace, SupportTrio, d_optimal_trio, lagrange_eta, rho_coeffs
from .metamodel import QuadraticFit, SampleStore, fit_ols, inverse_weight_sum
from .rate import argmin_excluding, identify, rate_from_variance

SIGMA2_FLOOR = 1e-12
GAP_FLOOR_REL = 1e-6
VARIANCE_MODES = ("known", "estimated")


@dataclass
class PolicyConfig:
    m: int
    total_budget: int
    n0: int = 10
    delta: int = 100
    variance_mode: str = "estimated"
    seed: int = 0
    known_sigma2: float | None = None

    def __post_init__(self):
        if self.n0 < 2:
            raise ValueError("n0 must be at least 2")
        if self.delta < 1:
            raise ValueError("delta must be at least 1")
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if self.variance_mode not in VARIANCE_MODES:
            raise ValueError(f"variance_mode must be one of {VARIANCE_MODES}")
        if self.variance_mode == "known" and self.known_sigma2 is None:
            raise ValueError("known variance mode needs known_sigma2")


class AllocationState:
    """Samples, current support trios and bookkeeping of one macro-replication."""

    def __init__(self, space: PartitionedSpace, total_budget: int, record: bool = False):
        self.space = space
        self.total_budget = int(total_budget)
        self.store = SampleStore(space.size)
        self.trios: list[SupportTrio] = [d_optimal_trio(a, b) for a, b in space.bounds]
        self.alphas: list[np.ndarray] = [np.full(3, 1.0 / 3.0) for _ in space.bounds]
        self.thetas = np.full(space.n_partitions, 1.0 / space.n_partitions)
        self.kappa = 0
        self.cursor = 0
        self.m_index: int | None = None
        self.keys: list[int] = []
        self.trace: list[dict] | None = [] if record else None

    @property
    def used(self) -> int:
        return self.store.total

    @property
    def remaining(self) -> int:
        return self.total_budget - self.used

    def simulate(self, increments, oracle, rng) -> None:
        increments = np.asarray(increments, dtype=np.int64)
        if np.any(increments < 0):
            raise ValueError("increments must be nonnegative")
        if increments.sum() > self.remaining:
            raise ValueError("increments exceed the remaining budget")
        for i in np.flatnonzero(increments):
            self.store.add(int(i), oracle.sample(int(i), rng, int(increments[i])))
        if self.trace is not None:
            self.trace.append({
                "kappa": self.kappa,
                "increments": increments.copy(),
                "counts": self.store.counts.copy(),
                "trios": [t.as_tuple() for t in self.trios],
                "m_index": self.m_index,
                "keys": list(self.keys),
                "thetas": self.thetas.copy(),
            })


def apportion(weights, amount: int, prefer=None) -> np.ndarray:
    """Integer split of ``amount`` proportional to ``weights`` (largest remainder).

    Leftover units go to the largest fractional parts, then to the largest
    ``prefer`` value, then to the lowest index.
    """
    w = np.maximum(np.asarray(weights, dtype=float), 0.0)
    out = np.zeros(w.size, dtype=np.int64)
    if amount <= 0:
        return out
    total = w.sum()
    if total <= 0:
        raise ValueError("no positive weight to apportion over")
    raw = amount * w / total
    out[:] = np.floor(raw)
    short = int(amount - out.sum())
    if short > 0:
        frac = raw - out
        pref = np.zeros(w.size) if prefer is None else np.asarray(prefer, dtype=float)
        order = np.lexsort((np.arange(w.size), -pref, -frac))
        out[order[:short]] += 1
    return out


def increments_from_targets(targets, counts, amount: int) -> np.ndarray:
    """Spend ``amount`` on the shortfalls max(0, target - count)."""
    targets = np.asarray(targets, dtype=float)
    deficits = np.maximum(targets - np.asarray(counts, dtype=float), 0.0)
    weights = deficits if deficits.sum() > 0 else targets
    return apportion(weights, amount, prefer=targets)


def split_equal(amount: int, parts: int, rotate: int = 0) -> np.ndarray:
    """Near-equal integer split; the extra units rotate with ``rotate``."""
    out = np.full(parts, amount // parts, dtype=np.int64)
    extra = amount % parts
    out[(rotate + np.arange(extra)) % parts] += 1
    return out


# plug-in variances ---------------------------------------------------------

def _trio_prediction_var(fit: QuadraticFit, sigma2, trio_loc, trio_counts, x) -> np.ndarray:
    """Var f_hat(x) from the trio counts; falls back to the full fit when a node is empty."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(sigma2 * inverse_weight_sum(lagrange_eta(trio_loc, x), trio_counts))
    bad = np.isinf(v)
    if bad.any():
        v[bad] = fit.prediction_variance(x[bad], sigma2)
    return v


def _trio_diff_var(fit: QuadraticFit, sigma2, trio_loc, trio_counts, x_ref, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = np.atleast_1d(sigma2 * inverse_weight_sum(rho_coeffs(trio_loc, x_ref, x), trio_counts))
    bad = np.isinf(v)
    if bad.any():
        v[bad] = fit.diff_variance(x_ref, x[bad], sigma2)
    return v


@dataclass
class _BlockUpdate:
    key: int               # global index
    trio: SupportTrio      # global indices
    alphas: np.ndarray
    rates: np.ndarray = field(repr=False)


def _reference_block_update(state, h, fit, sigma2, pred, m_index) -> _BlockUpdate:
    """Key design, middle support design and node split for the block holding ``m_index``."""
    start, stop = state.space.bounds[h]
    loc = state.space.locations
    trio = list(state.trios[h])
    counts = state.store.counts[trio].astype(float)
    x = loc[start:stop]
    var = _trio_diff_var(fit, sigma2, loc[trio], counts, loc[m_index], x)
    rates = rate_from_variance(pred[m_index] - pred[start:stop], var)
    m_local = m_index - start
    key_local = argmin_excluding(rates, m_local)
    _, t_local, alloc = support_location_t4(x, key_local, m_local)
    new_trio = SupportTrio(*(start + j for j in t_local))
    return _BlockUpdate(start + key_local, new_trio, np.array(alloc.alphas), rates)


def _other_block_update(state, h, fit, sigma2, pred, m_index, var_m) -> _BlockUpdate:
    start, stop = state.space.bounds[h]
    loc = state.space.locations
    trio = list(state.trios[h])
    counts = state.store.counts[trio].astype(float)
    x = loc[start:stop]
    var = var_m + _trio_prediction_var(fit, sigma2, loc[trio], counts, x)
    rates = rate_from_variance(pred[m_index] - pred[start:stop], var)
    key_local = argmin_excluding(rates)
    _, t_local, alloc = support_location_t4(x, key_local)
    new_trio = SupportTrio(*(start + j for j in t_local))
    return _BlockUpdate(start + key_local, new_trio, np.array(alloc.alphas), rates)


# policies ------------------------------------------------------------------

class Policy:
    name = "policy"

    def prepare_space(self, space: PartitionedSpace) -> PartitionedSpace:
        return space

    def initialization_cost(self, space: PartitionedSpace, config: PolicyConfig) -> int:
        return 3 * config.n0 * space.n_partitions

    def initialize(self, state: AllocationState, config: PolicyConfig, oracle, rng) -> None:
        inc = np.zeros(state.space.size, dtype=np.int64)
        for trio in state.trios:
            inc[list(trio)] = config.n0
        state.simulate(inc, oracle, rng)

    def plan(self, state: AllocationState, config: PolicyConfig) -> np.ndarray:
        raise NotImplementedError

    def step(self, state: AllocationState, config: PolicyConfig, oracle, rng) -> None:
        inc = self.plan(state, config)
        state.simulate(inc, oracle, rng)
        state.kappa += 1

    def predictions(self, state: AllocationState, config: PolicyConfig) -> np.ndarray:
        fits, _ = fit_blocks(state, config)
        return pooled_predictions(state.space, fits)

    def select(self, state: AllocationState, config: PolicyConfig) -> np.ndarray:
        return identify(self.predictions(state, config), config.m)[1]


def fit_blocks(state: AllocationState, config: PolicyConfig):
    """One OLS fit per partition plus the noise variance each policy step uses."""
    loc = state.space.locations
    fits, sig = [], []
    for start, stop in state.space.bounds:
        fit = fit_ols(state.store, loc, np.arange(start, stop))
        s2 = config.known_sigma2 if config.variance_mode == "known" else fit.sigma2_hat
        fits.append(fit)
        sig.append(max(float(s2), SIGMA2_FLOOR))
    return fits, np.array(sig)


def pooled_predictions(space: PartitionedSpace, fits) -> np.ndarray:
    pred = np.empty(space.size)
    for (start, stop), fit in zip(space.bounds, fits):
        pred[start:stop] = fit.predict(space.locations[start:stop])
    return pred


class OcbaMrp(Policy):
    """Regression allocation within and between partitions."""

    name = "ocba-mrp"

    def plan(self, state, config):
        space = state.space
        loc = space.locations
        l = space.n_partitions
        fits, sig = fit_blocks(state, config)
        pred = pooled_predictions(space, fits)
        m_index = identify(pred, config.m)[0]
        b = space.partition_of(m_index)

        updates: list[_BlockUpdate | None] = [None] * l
        updates[b] = _reference_block_update(state, b, fits[b], sig[b], pred, m_index)
        trio_b = list(state.trios[b])
        var_m = _trio_prediction_var(fits[b], sig[b], loc[trio_b],
                                     state.store.counts[trio_b].astype(float), loc[m_index])[0]
        for h in range(l):
            if h != b:
                updates[h] = _other_block_update(state, h, fits[h], sig[h], pred, m_index, var_m)

        if l == 1:
            thetas = np.ones(1)
        else:
            keys = np.array([u.key for u in updates])
            gaps = pred[m_index] - pred[keys]
            spread = pred.max() - pred.min()
            floor = GAP_FLOOR_REL * spread if spread > 0 else 1.0
            new_b = list(updates[b].trio)
            factor = float(inverse_weight_sum(lagrange_eta(loc[new_b], loc[m_index]), updates[b].alphas))
            thetas = theta_star_t5(gaps, sig, b, b_factor=factor, gap_floor=floor).thetas

        step = min(config.delta, state.remaining)
        base = state.used + step
        targets = np.zeros(space.size)
        for h, u in enumerate(updates):
            targets[list(u.trio)] += thetas[h] * u.alphas * base
        nodes = np.flatnonzero(targets > 0)
        inc = np.zeros(space.size, dtype=np.int64)
        inc[nodes] = increments_from_targets(targets[nodes], state.store.counts[nodes], step)

        state.trios = [u.trio for u in updates]
        state.alphas = [u.alphas for u in updates]
        state.thetas = thetas
        state.m_index = m_index
        state.keys = [u.key for u in updates]
        return inc


class OcbaMrEqualPartition(Policy):
    """Equal budget per partition, single-fit OCBA-mr inside each partition."""

    name = "ocba-mr-ep"

    def plan(self, state, config):
        space = state.space
        l = space.n_partitions
        fits, sig = fit_blocks(state, config)
        step = min(config.delta, state.remaining)
        shares = split_equal(step, l, rotate=state.kappa)
        inc = np.zeros(space.size, dtype=np.int64)
        updates = []
        for h, (start, stop) in enumerate(space.bounds):
            pred = np.full(space.size, np.nan)
            pred[start:stop] = fits[h].predict(space.locations[start:stop])
            m_local = identify(pred[start:stop], min(config.m, stop - start - 1))[0]
            u = _reference_block_update(state, h, fits[h], sig[h], pred, start + m_local)
            updates.append(u)
            nodes = list(u.trio)
            n_h = state.store.counts[start:stop].sum()
            targets = u.alphas * (n_h + shares[h])
            inc[nodes] = increments_from_targets(targets, state.store.counts[nodes], int(shares[h]))
        state.trios = [u.trio for u in updates]
        state.alphas = [u.alphas for u in updates]
        state.thetas = np.full(l, 1.0 / l)
        state.keys = [u.key for u in updates]
        return inc


class OcbaMr(OcbaMrEqualPartition):
    """One quadratic over the whole (one-dimensional) design space."""

    name = "ocba-mr"

    def prepare_space(self, space):
        return space.merged()


class EqualAllocation(Policy):
    """Round-robin over all designs; selection by raw sample means."""

    name = "ea"

    def initialization_cost(self, space, config):
        return space.size

    def initialize(self, state, config, oracle, rng):
        pass

    def plan(self, state, config):
        step = min(config.delta, state.remaining)
        t = state.space.size
        idx = (state.cursor + np.arange(step)) % t
        state.cursor = int((state.cursor + step) % t)
        return np.bincount(idx, minlength=t).astype(np.int64)

    def predictions(self, state, config):
        return state.store.sample_means()


POLICIES: dict[str, type[Policy]] = {
    cls.name: cls for cls in (EqualAllocation, OcbaMr, OcbaMrp, OcbaMrEqualPartition)
}


def get_policy(name: str) -> Policy:
    try:
        return POLICIES[name]()
    except KeyError:
        raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICIES)}") from None


def run_policy(policy: Policy, space: PartitionedSpace, oracle, config: PolicyConfig,
               rng: np.random.Generator, record: bool = False) -> AllocationState:
    """INITIALIZE, then step until the budget is spent."""
    space = policy.prepare_space(space)
    cost = policy.initialization_cost(space, config)
    if config.total_budget < cost:
        raise ValueError(f"budget {config.total_budget} is below the initialization cost {cost}")
    state = AllocationState(space, config.total_budget, record=record)
    policy.initialize(state, config, oracle, rng)
    while state.remaining > 0:
        policy.step(state, config, oracle, rng)
    return state


def step_ocba_mr(state, config, oracle, rng):
    OcbaMr().step(state, config, oracle, rng)


def step_ocba_mrp(state, config, oracle, rng):
    OcbaMrp().step(state, config, oracle, rng)


def step_equal(state, config, oracle, rng):
    EqualAllocation().step(state, config, oracle, rng)


def step_ocba_mr_equal_partition(state, config, oracle, rng):
    OcbaMrEqualPartition().step(state, config, oracle, rng)
