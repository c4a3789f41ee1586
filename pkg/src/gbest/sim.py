"""Synthetic survival data from a Weibull AFT model with administrative censoring."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, SeededRngStream, as_generator
from .estimators import WeibullAftModel

FAMILIES = ("uniform(0,10)", "uniform(-1,1)", "normal(0,1)")
_FAMILY_ALIASES = {"unif10": "uniform(0,10)", "unif": "uniform(-1,1)", "norm": "normal(0,1)",
                   "normal": "normal(0,1)", "uniform": "uniform(0,10)"}

# signal on the first three covariates, two noise covariates; the unit-scale
# families use 5x coefficients so the linear predictor has the same variance
# under U(0,10) and U(-1,1)
_BASE_COEF = (0.1, -0.1, 0.05, 0.0, 0.0)


def canonical_family(name: str) -> str:
    name = _FAMILY_ALIASES.get(name, name)
    if name not in FAMILIES:
        raise ValueError(f"unknown covariate family {name!r}; choose from {FAMILIES}")
    return name


def default_weibull(family: str = "uniform(0,10)", p: int = 5) -> WeibullAftModel:
    family = canonical_family(family)
    mult = 1.0 if family == "uniform(0,10)" else 5.0
    coef = np.zeros(p)
    k = min(p, len(_BASE_COEF))
    coef[:k] = np.array(_BASE_COEF[:k]) * mult
    return WeibullAftModel(2.0, coef, math.log(0.7))


@dataclass(frozen=True)
class SimConfig:
    n: int = 100
    p: int = 5
    covariate_family: str = "uniform(0,10)"
    weibull: WeibullAftModel | None = None
    target_censoring: float = 0.1
    seed: int = 0
    pilot_size: int = 100_000

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.p < 0:
            raise ValueError("p must be >= 0")
        if not 0 <= self.target_censoring <= 0.95:
            raise ValueError("target_censoring must lie in [0, 0.95]")
        object.__setattr__(self, "covariate_family", canonical_family(self.covariate_family))
        if self.weibull is None:
            object.__setattr__(self, "weibull", default_weibull(self.covariate_family, self.p))
        elif np.size(self.weibull.coefficients) != self.p:
            raise ValueError("Weibull coefficient vector must have length p")


def draw_covariates(family: str, n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    family = canonical_family(family)
    if family == "uniform(0,10)":
        return rng.uniform(0.0, 10.0, (n, p))
    if family == "uniform(-1,1)":
        return rng.uniform(-1.0, 1.0, (n, p))
    return rng.standard_normal((n, p))


def draw_true_times(cfg: SimConfig, n: int, rng: np.random.Generator):
    X = draw_covariates(cfg.covariate_family, n, cfg.p, rng)
    return X, cfg.weibull.sample(X, rng)


def calibrate_censoring(cfg: SimConfig, target: float, rng) -> float:
    """Administrative threshold c with Monte Carlo P(U > c) matching ``target``.

    Bisection on log c over a pilot sample; returns ``inf`` for target 0.
    """
    if not 0 <= target <= 0.95:
        raise ValueError("target censoring must lie in [0, 0.95]")
    if target == 0:
        return math.inf
    _, U = draw_true_times(cfg, cfg.pilot_size, as_generator(rng))
    U = np.sort(U)

    def tail(c):
        return 1.0 - np.searchsorted(U, c, side="right") / U.size

    lo, hi = math.log(U[0]) - 1.0, math.log(U[-1]) + 1.0
    if not tail(math.exp(lo)) >= target >= tail(math.exp(hi)):
        raise ValueError(f"target censoring {target} cannot be bracketed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tail(math.exp(mid)) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    c = math.exp(hi)
    if abs(tail(c) - target) > 0.005:
        raise ValueError(f"could not reach censoring {target} (pilot gives {tail(c):.4f})")
    return c


def simulate_arrays(cfg: SimConfig, rng=None, threshold: float | None = None):
    """(X, observed time, event, threshold); works for p = 0."""
    stream = rng if isinstance(rng, SeededRngStream) else SeededRngStream(int(cfg.seed))
    if threshold is None:
        threshold = calibrate_censoring(cfg, cfg.target_censoring, stream.substream(1))
    X, U = draw_true_times(cfg, cfg.n, stream.substream(0).generator())
    event = U <= threshold
    return X, np.minimum(U, threshold), event, threshold


def simulate_dataset(cfg: SimConfig, rng=None, threshold: float | None = None) -> Dataset:
    """Covariates, Weibull AFT event times and administrative censoring.

    ``rng`` is a :class:`SeededRngStream`; by default one is built from
    ``cfg.seed``.  A precomputed censoring ``threshold`` skips calibration.
    """
    if cfg.p < 1:
        raise ValueError("datasets need at least one covariate; use simulate_arrays for p = 0")
    X, time, event, _ = simulate_arrays(cfg, rng, threshold)
    return Dataset(time, event, X, [f"x{j + 1}" for j in range(cfg.p)])
