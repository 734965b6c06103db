"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import explicit_inverse_3x3, record_criterion
from ocbamr import verify
from ocbamr.design_space import lagrange_eta, rho_coeffs
from ocbamr.harness import estimate_pcs, pooled_stderr
from ocbamr.metamodel import SampleStore, diff_var_within, fit_ols
from ocbamr.oracles import builtin_experiment

REPS = 500


def random_nodes(rng, lo=0.0, hi=10.0, gap=0.5):
    while True:
        t = np.sort(rng.uniform(lo, hi, 3))
        if np.min(np.diff(t)) >= gap:
            return t


def test_criterion_01_lagrange_identities():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        nodes = random_nodes(rng)
        xi, xj = rng.uniform(0.0, 10.0, 2)
        ei, ej = lagrange_eta(nodes, xi), lagrange_eta(nodes, xj)
        r = rho_coeffs(nodes, xi, xj)
        worst = max(worst, abs(ei.sum() - 1.0), abs(r.sum()), np.max(np.abs(r - (ei - ej))))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 1.0
    assert record_criterion(1, ok, f"max identity residual {worst:.2e} (tol 1e-12), {dt:.2f}s")


def test_criterion_02_ols_oracle():
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        k = int(rng.integers(4, 12))
        loc = np.sort(rng.uniform(-5.0, 5.0, k))
        store = SampleStore(k)
        xs, ys = [], []
        for i in range(k):
            y = rng.normal(0.4 - 0.2 * loc[i] + 0.3 * loc[i] ** 2, 1.0, int(rng.integers(2, 15)))
            store.add(i, y)
            xs.append(np.full(y.size, loc[i]))
            ys.append(y)
        x, y = np.concatenate(xs), np.concatenate(ys)
        X = np.column_stack([np.ones_like(x), x, x * x])
        beta = explicit_inverse_3x3(X.T @ X) @ (X.T @ y)
        got = fit_ols(store, loc).beta
        worst = max(worst, np.max(np.abs(got - beta) / np.maximum(np.abs(beta), 1e-300)))
    loc = np.linspace(-3.0, 7.0, 25)
    store = SampleStore(25)
    for i in (0, 7, 24):
        store.add(i, np.full(4, 2.0 - 1.5 * loc[i] + 0.25 * loc[i] ** 2))
    exact = np.max(np.abs(fit_ols(store, loc).beta - [2.0, -1.5, 0.25]))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and exact <= 1e-10 and dt < 1.0
    assert record_criterion(2, ok, f"max rel coef diff {worst:.2e} (tol 1e-8), "
                                   f"noiseless error {exact:.2e} (tol 1e-10), {dt:.2f}s")


def test_criterion_03_variance_forms_agree():
    rng = np.random.default_rng(103)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        nodes = random_nodes(rng, -5.0, 5.0)
        counts = rng.integers(2, 40, 3)
        store = SampleStore(3)
        for r in range(3):
            store.add(r, rng.normal(size=int(counts[r])))
        fit = fit_ols(store, nodes)
        xi, xj = rng.uniform(-5.0, 5.0, 2)
        s2 = rng.uniform(0.2, 5.0)
        X = lambda z: np.array([1.0, z, z * z])
        d = X(xi) - X(xj)
        matrix = s2 * d @ explicit_inverse_3x3(fit.info_matrix) @ d
        rho_form = diff_var_within(s2, counts.astype(float), nodes, xi, xj)
        worst = max(worst, abs(rho_form - matrix) / matrix)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 1.0
    assert record_criterion(3, ok, f"max rel diff rho-form vs matrix-form {worst:.2e} (tol 1e-9), {dt:.2f}s")


@pytest.mark.parametrize("number,check,limit", [
    (4, verify.check_single_fit_weights, 10.0),
    (5, verify.check_support_location, 30.0),
    (6, verify.check_partition_split, 30.0),
    (7, verify.check_ld_rate, 60.0),
])
def test_criteria_04_to_07_optimality_oracles(number, check, limit):
    res = check()
    ok = res.passed and res.seconds < limit
    assert record_criterion(number, ok, f"{res.line()} (limit {limit:.0f}s)")


@pytest.fixture(scope="module")
def exp1_curve():
    spec = builtin_experiment("exp1")
    return estimate_pcs(spec, ["ea", "ocba-mr", "ocba-mrp"], [1500, 3000, 5000], REPS, master_seed=2024)


def test_criterion_08_exp1_ordering(exp1_curve):
    ea = exp1_curve.get("ea", 5000)
    parts, ok = [], True
    for name in ("ocba-mr", "ocba-mrp"):
        p = exp1_curve.get(name, 5000)
        z = (p.pcs - ea.pcs) / pooled_stderr(p, ea) if pooled_stderr(p, ea) > 0 else np.inf * np.sign(p.pcs - ea.pcs)
        ok &= z >= 2.0
        parts.append(f"{name} {p.pcs:.3f} vs ea {ea.pcs:.3f} ({z:.1f} SE)")
    assert record_criterion(8, ok, "; ".join(parts) + " (need >= 2 SE)")


def test_criterion_09_exp2_ordering():
    spec = builtin_experiment("exp2")
    c = estimate_pcs(spec, ["ea", "ocba-mr-ep", "ocba-mrp"], [5000], REPS, master_seed=2025)
    ea, ep, mrp = (c.get(n, 5000) for n in ("ea", "ocba-mr-ep", "ocba-mrp"))
    se = pooled_stderr(mrp, ea)
    z = (mrp.pcs - ea.pcs) / se if se > 0 else np.inf
    ok = mrp.pcs >= ep.pcs >= ea.pcs and z >= 2.0
    detail = (f"ocba-mrp {mrp.pcs:.3f} >= ocba-mr-ep {ep.pcs:.3f} >= ea {ea.pcs:.3f}: "
              f"{mrp.pcs >= ep.pcs}/{ep.pcs >= ea.pcs}; mrp-ea {z:.1f} SE (need >= 2)")
    assert record_criterion(9, ok, detail)


def test_criterion_10_monotone_in_budget(exp1_curve):
    parts, ok = [], True
    for name in ("ea", "ocba-mr", "ocba-mrp"):
        lo, hi = exp1_curve.get(name, 1500), exp1_curve.get(name, 5000)
        slack = hi.pcs - (lo.pcs - 3.0 * pooled_stderr(lo, hi))
        ok &= slack >= 0.0
        parts.append(f"{name} {lo.pcs:.3f}->{hi.pcs:.3f}")
    assert record_criterion(10, ok, "; ".join(parts) + " (5000 >= 1500 - 3 SE)")


def test_criterion_11_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.csv"
        subprocess.run([sys.executable, "-m", "ocbamr", "run", "--experiment", "exp1",
                        "--policies", "ea,ocba-mr,ocba-mrp", "--budgets", "500,1000",
                        "--reps", "20", "--seed", "77", "--out", str(path)], check=True)
        outs.append(path.read_bytes())
    dt = time.perf_counter() - t0
    ok = outs[0] == outs[1] and len(outs[0]) > 0 and dt < 60.0
    assert record_criterion(11, ok, f"two CLI runs byte-identical: {outs[0] == outs[1]} "
                                    f"({len(outs[0])} bytes), {dt:.1f}s")
