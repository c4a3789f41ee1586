"""Censoring-aware prediction error: IPCW Brier score and its integral."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Dataset, StepFunction
from .estimators import censoring_km


@dataclass(frozen=True)
class EvaluationResult:
    ibs: float
    per_time_brier: StepFunction
    horizon: float


def _curves(predict, test: Dataset) -> list[StepFunction]:
    if callable(predict):
        return [predict(x) for x in test.X]
    curves = list(predict)
    if len(curves) != test.n:
        raise ValueError(f"{len(curves)} predicted curves for {test.n} test subjects")
    return curves


def _left_limit(f: StepFunction, t: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(f.knots, t, side="left") - 1
    padded = np.concatenate(([f.value_before_first_knot], f.values))
    return padded[pos + 1]


def _brier_matrix(S: np.ndarray, grid: np.ndarray, test: Dataset, G: StepFunction) -> np.ndarray:
    """Brier score at each grid time; S is (n_test, len(grid))."""
    T = test.time[:, None]
    died = (T <= grid[None, :]) & test.event[:, None]
    alive = T > grid[None, :]
    g_event = _left_limit(G, test.time)[:, None]
    g_now = G(grid)[None, :]
    g_now = np.broadcast_to(g_now, S.shape)
    g_event = np.broadcast_to(g_event, S.shape)
    usable = ~((died & (g_event <= 0)) | (alive & (g_now <= 0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        term = np.where(died & usable, S**2 / g_event, 0.0) + np.where(alive & usable, (1 - S) ** 2 / g_now, 0.0)
    count = usable.sum(axis=0)
    return np.where(count > 0, term.sum(axis=0) / np.maximum(count, 1), 0.0)


def brier_score(predict, test: Dataset, t: float, censor_model: StepFunction | None = None) -> float:
    """IPCW Brier score at time ``t``.

    ``predict`` maps a covariate vector to a survival curve, or is a
    sequence of curves aligned with ``test``.  ``censor_model`` defaults to
    the censoring Kaplan-Meier of ``test``.
    """
    if test.n == 0:
        raise ValueError("empty test set")
    if t < 0:
        raise ValueError("t must be >= 0")
    G = censoring_km(test) if censor_model is None else censor_model
    grid = np.array([float(t)])
    S = np.array([[c(t)] for c in _curves(predict, test)])
    return float(_brier_matrix(S, grid, test, G)[0])


def integrated_brier(predict, test: Dataset, censor_model: StepFunction | None = None,
                     horizon_fraction: float = 0.8) -> EvaluationResult:
    """Time-averaged Brier score over [0, 0.8 * max test time].

    The integrand is piecewise constant between prediction knots, test times
    and censoring knots, so the integral is computed exactly on that grid.
    """
    if test.n == 0:
        raise ValueError("empty test set")
    horizon = horizon_fraction * float(test.time.max())
    if not horizon > 0:
        raise ValueError("integration horizon is zero")
    G = censoring_km(test) if censor_model is None else censor_model
    curves = _curves(predict, test)
    pieces = [np.zeros(1), test.time, G.knots] + [c.knots for c in curves]
    grid = np.unique(np.concatenate(pieces))
    grid = grid[grid < horizon]
    S = np.vstack([c(grid) for c in curves])
    bs = _brier_matrix(S, grid, test, G)
    widths = np.diff(np.append(grid, horizon))
    ibs = float(np.dot(bs, widths) / horizon)
    return EvaluationResult(min(max(ibs, 0.0), 1.0), StepFunction(grid, bs, float(bs[0])), horizon)


def logit(p: float, eps: float = 1e-6) -> float:
    p = min(max(float(p), eps), 1.0 - eps)
    return math.log(p / (1.0 - p))


@dataclass(frozen=True)
class Summary:
    mean: float
    median: float
    q05: float
    q25: float
    q75: float
    q95: float
    sd: float
    n: int


def summarize(values: Sequence[float]) -> Summary:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot summarise an empty list")
    q = np.quantile(v, [0.05, 0.25, 0.5, 0.75, 0.95])  # type-7 interpolation
    # shifting by the first value keeps constant inputs exact
    dev = v - v[0]
    sd = float(dev.std(ddof=1)) if v.size > 1 else 0.0
    return Summary(float(v[0] + dev.mean()), float(q[2]), float(q[0]), float(q[1]), float(q[3]), float(q[4]), sd, int(v.size))
