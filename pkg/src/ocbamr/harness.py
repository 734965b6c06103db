"""Monte-Carlo estimation of the probability of correct selection."""

from __future__ import annotations

import csv
import io
import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import isotonic_regression

from .metamodel import InsufficientDataError, RankDeficientError
from .oracles import ExperimentSpec
from .policies import PolicyConfig, get_policy, run_policy

log = logging.getLogger(__name__)

CSV_COLUMNS = ("experiment", "policy", "budget", "reps", "pcs", "stderr",
               "seed", "variance_mode", "grid_convention")


def replication_seed(master_seed: int, policy: str, budget: int, rep: int) -> np.random.SeedSequence:
    """Independent stream per (policy, budget, replication)."""
    return np.random.SeedSequence(
        entropy=int(master_seed),
        spawn_key=(zlib.crc32(policy.encode("utf-8")), int(budget), int(rep)),
    )


def make_config(spec: ExperimentSpec, budget: int, variance_mode: str = "estimated", seed: int = 0) -> PolicyConfig:
    known = None
    if variance_mode == "known":
        if spec.noise_sd is None:
            raise ValueError("known variance mode needs an oracle with noise_sd")
        known = float(spec.noise_sd) ** 2
    return PolicyConfig(m=spec.m, total_budget=int(budget), n0=spec.n0, delta=spec.delta,
                        variance_mode=variance_mode, seed=seed, known_sigma2=known)


def run_replication(spec: ExperimentSpec, policy: str, budget: int, seed,
                    variance_mode: str = "estimated") -> bool:
    """One macro-replication; True when the selected set equals the true top-m."""
    config = make_config(spec, budget, variance_mode)
    pol = get_policy(policy)
    cost = pol.initialization_cost(pol.prepare_space(spec.space), config)
    if budget < cost:
        raise ValueError(f"budget {budget} is below the initialization cost {cost} of {policy}")
    rng = np.random.default_rng(seed)
    try:
        state = run_policy(pol, spec.space, spec.oracle, config, rng)
        selected = pol.select(state, config)
    except (RankDeficientError, InsufficientDataError, np.linalg.LinAlgError) as exc:
        log.warning("fit failed for %s at budget %d: %s", policy, budget, exc)
        return False
    return bool(np.array_equal(np.sort(selected), spec.true_top))


@dataclass(frozen=True)
class PcsPoint:
    policy: str
    budget: int
    pcs: float
    stderr: float
    reps: int


@dataclass
class PcsCurve:
    experiment: str
    seed: int
    variance_mode: str
    grid_convention: str
    points: list[PcsPoint] = field(default_factory=list)

    def get(self, policy: str, budget: int) -> PcsPoint:
        for p in self.points:
            if p.policy == policy and p.budget == budget:
                return p
        raise KeyError((policy, budget))

    def rows(self) -> list[dict]:
        return [{
            "experiment": self.experiment,
            "policy": p.policy,
            "budget": p.budget,
            "reps": p.reps,
            "pcs": f"{p.pcs:.6f}",
            "stderr": f"{p.stderr:.6f}",
            "seed": self.seed,
            "variance_mode": self.variance_mode,
            "grid_convention": self.grid_convention,
        } for p in self.points]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def pcs_point(policy: str, budget: int, hits: int, reps: int) -> PcsPoint:
    p = hits / reps
    return PcsPoint(policy, int(budget), p, float(np.sqrt(p * (1.0 - p) / reps)), reps)


def _count_hits(spec, policy, budget, reps: Sequence[int], master_seed, variance_mode) -> int:
    return sum(
        run_replication(spec, policy, budget, replication_seed(master_seed, policy, budget, r), variance_mode)
        for r in reps
    )


def estimate_pcs(spec: ExperimentSpec, policies: Iterable[str], budgets: Iterable[int], reps: int,
                 master_seed: int = 0, variance_mode: str = "estimated", workers: int = 1) -> PcsCurve:
    """PCS per (policy, budget) from ``reps`` independent macro-replications."""
    if reps < 1:
        raise ValueError("reps must be at least 1")
    policies = list(policies)
    budgets = [int(b) for b in budgets]
    for name in policies:
        get_policy(name)
    curve = PcsCurve(spec.name, int(master_seed), variance_mode, spec.grid_convention)
    cells = [(p, b) for p in policies for b in budgets]
    if workers <= 1:
        hits = [_count_hits(spec, p, b, range(reps), master_seed, variance_mode) for p, b in cells]
    else:
        chunks = np.array_split(np.arange(reps), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [[pool.submit(_count_hits, spec, p, b, c.tolist(), master_seed, variance_mode)
                        for c in chunks] for p, b in cells]
            hits = [sum(f.result() for f in fs) for fs in futures]
    for (p, b), h in zip(cells, hits):
        curve.points.append(pcs_point(p, b, h, reps))
    return curve


def pooled_stderr(a: PcsPoint, b: PcsPoint) -> float:
    """Standard error of the difference of two independent PCS estimates."""
    return float(np.sqrt(a.stderr ** 2 + b.stderr ** 2))


def isotonic_residuals(curve: PcsCurve, policy: str) -> np.ndarray:
    """Residuals of one policy's PCS curve from its best nondecreasing fit, in standard errors.

    Budgets are taken in increasing order; points with zero standard error
    count as one replication's worth of binomial spread.
    """
    pts = sorted((p for p in curve.points if p.policy == policy), key=lambda p: p.budget)
    if not pts:
        raise KeyError(policy)
    pcs = np.array([p.pcs for p in pts])
    se = np.array([p.stderr if p.stderr > 0 else 0.5 / np.sqrt(p.reps) for p in pts])
    trend = isotonic_regression(pcs, weights=1.0 / se ** 2, increasing=True).x
    return (pcs - trend) / se
