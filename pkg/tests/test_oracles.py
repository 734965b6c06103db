import json

import numpy as np
import pytest

from ocbamr.oracles import (
    BUILTIN, DEFAULT_DELTA, DEFAULT_N0, ExperimentSpec, Oracle, SimulationOracle,
    builtin_experiment, experiment_from_config, polynomial_oracle, sample, top_m,
)
from ocbamr.design_space import DesignSpace, PartitionedSpace


def test_zero_noise_returns_mean(rng):
    o = Oracle(np.array([1.0, 2.0, 3.0]), 0.0)
    assert sample(o, 1, rng) == 2.0
    np.testing.assert_array_equal(o.sample(2, rng, 4), [3.0] * 4)


def test_sample_mean_clt(rng):
    o = Oracle(np.array([0.5, -1.0]), 2.0)
    draws = o.sample(1, rng, 100_000)
    assert abs(draws.mean() + 1.0) <= 4 * 2.0 / np.sqrt(1e5)


def test_same_seed_same_stream():
    o = Oracle(np.zeros(3), 1.0)
    a = o.sample(0, np.random.default_rng(5), 10)
    b = o.sample(0, np.random.default_rng(5), 10)
    np.testing.assert_array_equal(a, b)


def test_oracle_validation():
    with pytest.raises(ValueError):
        Oracle(np.array([1.0, np.inf]), 1.0)
    with pytest.raises(ValueError):
        Oracle(np.array([1.0]), -1.0)


def test_defaults_match_published_settings():
    assert DEFAULT_N0 == 10 and DEFAULT_DELTA == 100
    for name in BUILTIN:
        spec = builtin_experiment(name)
        assert spec.n0 == 10 and spec.delta == 100


def test_exp1_definition():
    s = builtin_experiment("exp1")
    np.testing.assert_allclose(s.space.locations, np.arange(100) * 0.1)
    assert s.space.n_partitions == 5 and s.m == 5 and s.noise_sd == 2.0
    np.testing.assert_allclose(s.oracle.true_mean, (s.space.locations - 5.0) ** 2)
    # five grid points nearest the vertex
    d = np.abs(s.space.locations - 5.0)
    np.testing.assert_array_equal(s.true_top, np.sort(np.argsort(d, kind="stable")[:5]))


def test_exp2_definition_and_top_set():
    s = builtin_experiment("exp2")
    x = np.arange(100) * 0.2
    np.testing.assert_allclose(s.oracle.true_mean, 10 * (1 + x * x / 4000 - np.cos(x)))
    assert s.noise_sd == 0.2 and s.m == 3 and s.space.n_partitions == 5
    # sorted by brute force: x = 0, 6.2, 6.4
    order = np.argsort(10 * (1 + x * x / 4000 - np.cos(x)))
    np.testing.assert_array_equal(s.true_top, np.sort(order[:3]))
    np.testing.assert_array_equal(s.true_top, [0, 31, 32])


def test_exp3_excludes_log_singularity():
    s = builtin_experiment("exp3")
    assert s.space.locations[0] == pytest.approx(0.04) and s.space.locations[-1] == pytest.approx(8.0)
    assert s.space.size == 200 and s.space.n_partitions == 10 and s.noise_sd == 1.0 and s.m == 5
    x = s.space.locations
    np.testing.assert_allclose(s.oracle.true_mean, np.sin(x) + np.sin(10 * x / 3) + np.log(x) - 0.84 * x + 3)


def test_exp4_definition():
    s = builtin_experiment("exp4")
    x = np.arange(200) * 0.01
    np.testing.assert_allclose(s.space.locations, x)
    np.testing.assert_allclose(s.oracle.true_mean, 2 * (x - 0.75) ** 2 + np.sin(8 * np.pi * x - np.pi / 2))
    assert s.space.n_partitions == 20 and s.m == 3


def test_exp5_published_top_three():
    s = builtin_experiment("exp5")
    assert s.space.n_partitions == 11 and all(b - a == 11 for a, b in s.space.bounds)
    top = {tuple(s.space.coords[i].tolist()) for i in s.true_top}
    assert top == {(0.0, -1.0), (0.0, 0.0), (0.0, 1.0)}
    # partition i holds x2 = i - 6 with x1 as regressor
    for h, (a, b) in enumerate(s.space.bounds):
        np.testing.assert_array_equal(s.space.coords[a:b, 1], h - 5)
        np.testing.assert_array_equal(s.space.locations[a:b], np.arange(-5, 6))


def test_every_builtin_has_unique_top_set():
    for name in BUILTIN:
        s = builtin_experiment(name)
        mu = np.sort(s.oracle.true_mean)
        assert mu[s.m - 1] < mu[s.m]
    with pytest.raises(ValueError):
        builtin_experiment("exp6")


def test_top_m_rejects_ties():
    with pytest.raises(ValueError):
        top_m([1.0, 2.0, 2.0, 3.0], 2)
    np.testing.assert_array_equal(top_m([3.0, 1.0, 2.0], 2), [1, 2])


def test_pluggable_oracle():
    class Walk:
        n_designs = 4

        def sample(self, index, rng, size=None):
            return index + rng.standard_normal(size)

    space = PartitionedSpace.single(DesignSpace(np.arange(4.0)))
    assert isinstance(Walk(), SimulationOracle)
    with pytest.raises(ValueError):
        ExperimentSpec("walk", Walk(), space, m=1)
    spec = ExperimentSpec("walk", Walk(), space, m=1, true_top=[0])
    assert spec.true_top.tolist() == [0]


def test_config_overrides_builtin():
    s = experiment_from_config({"experiment": "exp1", "m": 3, "delta": 50, "name": "e1"})
    assert s.m == 3 and s.delta == 50 and s.name == "e1" and s.true_top.tolist() == [49, 50, 51]


def test_config_polynomial(tmp_path):
    cfg = {"name": "quad", "m": 3,
           "oracle": {"type": "polynomial", "coefficients": [25, -10, 1], "noise_sd": 2},
           "grid": {"start": 0, "stop": 10, "count": 100}, "partitions": 5,
           "policies": ["ea", "ocba-mrp"]}
    path = tmp_path / "quad.json"
    path.write_text(json.dumps(cfg))
    s = experiment_from_config(path)
    ref = builtin_experiment("exp1")
    np.testing.assert_allclose(s.oracle.true_mean, ref.oracle.true_mean, atol=1e-12)
    assert s.policies == ("ea", "ocba-mrp") and s.space.n_partitions == 5
    s2 = experiment_from_config({"m": 1, "oracle": {"coefficients": [0, 0, 1], "noise_sd": 1},
                                 "grid": {"locations": [-1, 0, 0.5, 2]}})
    assert s2.true_top.tolist() == [1]
    with pytest.raises(ValueError):
        experiment_from_config({"m": 1, "oracle": {"type": "table", "noise_sd": 1},
                                "grid": {"locations": [0, 1, 2]}})


def test_polynomial_oracle():
    o = polynomial_oracle([1.0, 0.0, 2.0], [0.0, 1.0, 2.0], 0.5)
    np.testing.assert_allclose(o.true_mean, [1.0, 3.0, 9.0])
