"""Noisy test problems and the built-in experiment catalogue."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, runtime_checkable

import numpy as np

from .design_space import DesignSpace, PartitionedSpace

DEFAULT_N0 = 10
DEFAULT_DELTA = 100


@runtime_checkable
class SimulationOracle(Protocol):
    """Anything that can produce replications of a design's output."""

    n_designs: int

    def sample(self, index: int, rng: np.random.Generator, size: int | None = None): ...


@dataclass(frozen=True)
class Oracle:
    """Known mean per design plus homoscedastic Gaussian noise."""

    true_mean: np.ndarray
    noise_sd: float
    description: str = ""

    def __post_init__(self):
        mu = np.asarray(self.true_mean, dtype=float).copy()
        if not np.all(np.isfinite(mu)):
            raise ValueError("true means must be finite")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be nonnegative")
        mu.flags.writeable = False
        object.__setattr__(self, "true_mean", mu)

    @property
    def n_designs(self) -> int:
        return self.true_mean.size

    def sample(self, index: int, rng: np.random.Generator, size: int | None = None):
        z = rng.standard_normal(size)
        return self.true_mean[index] + self.noise_sd * z


def sample(oracle: SimulationOracle, index: int, rng: np.random.Generator, size: int | None = None):
    return oracle.sample(index, rng, size)


def polynomial_oracle(coefficients, locations, noise_sd: float, description: str = "") -> Oracle:
    """Means c0 + c1 x + c2 x^2 + ... evaluated at ``locations``."""
    c = np.asarray(coefficients, dtype=float)
    mu = np.polynomial.polynomial.polyval(np.asarray(locations, dtype=float), c)
    return Oracle(mu, noise_sd, description or f"polynomial{tuple(c.tolist())}")


def top_m(true_mean, m: int) -> np.ndarray:
    """Indices of the m smallest means; raises if rank m and m+1 tie."""
    mu = np.asarray(true_mean, dtype=float)
    order = np.argsort(mu, kind="stable")
    if not mu[order[m - 1]] < mu[order[m]]:
        raise ValueError(f"top-{m} set is not unique: ranks {m} and {m + 1} tie at {mu[order[m]]}")
    return np.sort(order[:m])


@dataclass
class ExperimentSpec:
    name: str
    oracle: SimulationOracle
    space: PartitionedSpace
    m: int
    n0: int = DEFAULT_N0
    delta: int = DEFAULT_DELTA
    grid_convention: str = ""
    policies: tuple[str, ...] = ("ea", "ocba-mr", "ocba-mrp")
    true_top: np.ndarray | None = None
    noise_sd: float | None = None

    def __post_init__(self):
        if self.oracle.n_designs != self.space.size:
            raise ValueError("oracle and space disagree on the number of designs")
        if not 1 <= self.m < self.space.size:
            raise ValueError("need 1 <= m < number of designs")
        if self.true_top is None:
            mean = getattr(self.oracle, "true_mean", None)
            if mean is None:
                raise ValueError("oracles without true_mean must come with true_top")
            self.true_top = top_m(mean, self.m)
        else:
            self.true_top = np.sort(np.asarray(self.true_top, dtype=int))
            if self.true_top.size != self.m:
                raise ValueError("true_top must hold exactly m designs")
        if self.noise_sd is None:
            self.noise_sd = getattr(self.oracle, "noise_sd", None)


def _uniform_spec(name, func, start, stop, count, first, parts, noise_sd, m, policies, descr):
    space = DesignSpace.uniform(start, stop, count, first)
    pspace = PartitionedSpace.from_space(space, parts)
    lo, hi = (first, first + count - 1)
    conv = f"x_k={start}+k*({stop}-{start})/{count},k={lo}..{hi}"
    return ExperimentSpec(
        name=name,
        oracle=Oracle(func(space.locations), noise_sd, descr),
        space=pspace,
        m=m,
        grid_convention=conv,
        policies=policies,
    )


def _exp5() -> ExperimentSpec:
    grid = np.arange(-5, 6, dtype=float)
    x1, x2 = np.meshgrid(grid, grid)  # rows share x2
    x1, x2 = x1.ravel(), x2.ravel()
    mean = (x1 ** 2 + x2 ** 2) / 40.0 - np.cos(x1) * np.cos(x2 / np.sqrt(2.0)) + 1.0
    bounds = tuple((11 * i, 11 * (i + 1)) for i in range(11))
    space = PartitionedSpace(x1, bounds, coords=np.column_stack([x1, x2]))
    return ExperimentSpec(
        name="exp5",
        oracle=Oracle(mean, 2.0, "(x1^2+x2^2)/40-cos(x1)cos(x2/sqrt2)+1"),
        space=space,
        m=3,
        grid_convention="x1,x2 in {-5..5}; partition i holds x2=i-6, regressor x1",
        policies=("ea", "ocba-mr-ep", "ocba-mrp"),
    )


BUILTIN: dict[str, Callable[[], ExperimentSpec]] = {
    "exp1": lambda: _uniform_spec(
        "exp1", lambda x: (x - 5.0) ** 2, 0.0, 10.0, 100, 0, 5, 2.0, 5,
        ("ea", "ocba-mr", "ocba-mrp"), "(x-5)^2"),
    "exp2": lambda: _uniform_spec(
        "exp2", lambda x: 10.0 * (1.0 + x * x / 4000.0 - np.cos(x)), 0.0, 20.0, 100, 0, 5, 0.2, 3,
        ("ea", "ocba-mr-ep", "ocba-mrp"), "Griewank 10(1+x^2/4000-cos x)"),
    "exp3": lambda: _uniform_spec(
        "exp3", lambda x: np.sin(x) + np.sin(10.0 * x / 3.0) + np.log(x) - 0.84 * x + 3.0,
        0.0, 8.0, 200, 1, 10, 1.0, 5,
        ("ea", "ocba-mr-ep", "ocba-mrp"), "sin x+sin(10x/3)+log x-0.84x+3"),
    "exp4": lambda: _uniform_spec(
        "exp4", lambda x: 2.0 * (x - 0.75) ** 2 + np.sin(8.0 * np.pi * x - np.pi / 2.0),
        0.0, 2.0, 200, 0, 20, 1.0, 3,
        ("ea", "ocba-mr-ep", "ocba-mrp"), "2(x-0.75)^2+sin(8 pi x-pi/2)"),
    "exp5": _exp5,
}


def builtin_experiment(name: str) -> ExperimentSpec:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise ValueError(f"unknown experiment {name!r}; choose from {sorted(BUILTIN)}") from None


def experiment_from_config(config: dict | str | Path) -> ExperimentSpec:
    """Build an experiment from a JSON mapping (or a path to a JSON file).

    Either ``{"experiment": "exp1", ...overrides}`` or a custom polynomial::

        {"name": "quad", "m": 3,
         "oracle": {"type": "polynomial", "coefficients": [25, -10, 1], "noise_sd": 2},
         "grid": {"start": 0, "stop": 10, "count": 100},
         "partitions": 5}

    ``grid`` may instead be ``{"locations": [...]}``; ``partitions`` is a block
    count or a list of block sizes. Optional keys: ``n0``, ``delta``,
    ``policies``.
    """
    if not isinstance(config, dict):
        config = json.loads(Path(config).read_text(encoding="utf-8"))
    cfg = dict(config)
    if "experiment" in cfg:
        spec = builtin_experiment(cfg.pop("experiment"))
        for key in ("m", "n0", "delta"):
            if key in cfg:
                setattr(spec, key, int(cfg.pop(key)))
        if "policies" in cfg:
            spec.policies = tuple(cfg.pop("policies"))
        if "name" in cfg:
            spec.name = str(cfg.pop("name"))
        spec.true_top = top_m(spec.oracle.true_mean, spec.m)
        return spec

    grid = cfg["grid"]
    if "locations" in grid:
        space = DesignSpace(grid["locations"])
        conv = "explicit locations"
    else:
        first = int(grid.get("first", 0))
        space = DesignSpace.uniform(float(grid["start"]), float(grid["stop"]), int(grid["count"]), first)
        conv = (f"x_k={grid['start']}+k*({grid['stop']}-{grid['start']})/{grid['count']},"
                f"k={first}..{first + int(grid['count']) - 1}")
    pspace = PartitionedSpace.from_space(space, cfg.get("partitions", 1))
    ocfg = cfg["oracle"]
    if ocfg.get("type", "polynomial") != "polynomial":
        raise ValueError("config oracles must be of type 'polynomial'")
    oracle = polynomial_oracle(ocfg["coefficients"], space.locations, float(ocfg["noise_sd"]))
    policies = tuple(cfg.get("policies", ("ea", "ocba-mr", "ocba-mrp")))
    return ExperimentSpec(
        name=str(cfg.get("name", "custom")),
        oracle=oracle,
        space=pspace,
        m=int(cfg["m"]),
        n0=int(cfg.get("n0", DEFAULT_N0)),
        delta=int(cfg.get("delta", DEFAULT_DELTA)),
        grid_convention=conv,
        policies=policies,
    )
