"""Classical survival estimators.

All nonparametric estimators accept case weights; scaling every weight by
the same positive constant leaves their output unchanged.  At tied times
events leave the risk set before censorings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Dataset, StepFunction, TimeToEventRecord


class ConvergenceError(RuntimeError):
    """Newton iterations failed; ``model`` holds the last iterate, if any."""

    def __init__(self, message, model=None):
        super().__init__(message)
        self.model = model


class NoEventsError(ValueError):
    pass


def survival_arrays(data, event=None, weight=None):
    """Normalise a Dataset, a record list or raw arrays to ``(time, event, weight)``."""
    if isinstance(data, Dataset):
        return np.asarray(data.time), np.asarray(data.event), np.asarray(data.weight)
    if isinstance(data, (list, tuple)) and data and isinstance(data[0], TimeToEventRecord):
        return (
            np.array([r.time for r in data], dtype=float),
            np.array([r.event for r in data], dtype=bool),
            np.array([r.weight for r in data], dtype=float),
        )
    time = np.asarray(data, dtype=float)
    event = np.ones(time.shape, dtype=bool) if event is None else np.asarray(event, dtype=bool)
    weight = np.ones(time.shape) if weight is None else np.asarray(weight, dtype=float)
    return time, event, weight


def _event_table(time, event, weight):
    if time.size == 0:
        raise ValueError("no records")
    if np.any(weight < 0):
        raise ValueError("weights must be nonnegative")
    if not weight.sum() > 0:
        raise ValueError("all weights are zero")
    ut, inv = np.unique(time, return_inverse=True)
    n_event = np.bincount(inv, weights=weight * event, minlength=ut.size)
    n_total = np.bincount(inv, weights=weight, minlength=ut.size)
    at_risk = np.cumsum(n_total[::-1])[::-1]
    return ut, n_event, n_total - n_event, at_risk


def kaplan_meier(data, event=None, weight=None) -> StepFunction:
    """Weighted product-limit survival curve."""
    ut, d, _, y = _event_table(*survival_arrays(data, event, weight))
    keep = d > 0
    factors = 1.0 - d[keep] / y[keep]
    return StepFunction(ut[keep], np.clip(np.cumprod(factors), 0.0, 1.0), 1.0)


def nelson_aalen(data, event=None, weight=None) -> StepFunction:
    """Weighted Nelson-Aalen cumulative hazard."""
    ut, d, _, y = _event_table(*survival_arrays(data, event, weight))
    keep = d > 0
    return StepFunction(ut[keep], np.cumsum(d[keep] / y[keep]), 0.0)


def censoring_km(data, event=None, weight=None) -> StepFunction:
    """Kaplan-Meier estimate of the censoring survival function G."""
    ut, d, c, y = _event_table(*survival_arrays(data, event, weight))
    keep = c > 0
    # events at a tied time are removed before the censorings there
    factors = 1.0 - c[keep] / (y[keep] - d[keep])
    return StepFunction(ut[keep], np.clip(np.cumprod(factors), 0.0, 1.0), 1.0)


# ------------------------------------------------------------------------ Cox

@dataclass(frozen=True)
class CoxModel:
    coefficients: np.ndarray
    baseline_cumulative_hazard: StepFunction
    feature_names: tuple
    loglik: float = float("nan")
    n_iter: int = 0
    # covariate vector at which the baseline hazard is expressed (zeros if None)
    center: np.ndarray | None = None

    def _scale(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.center is not None:
            x = x - self.center
        with np.errstate(over="ignore"):
            return float(np.exp(x @ self.coefficients))

    def risk_score(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coefficients

    def survival(self, x) -> StepFunction:
        return cox_survival(self, x)


class _CoxTerms:
    """Breslow partial likelihood pieces for fixed data."""

    def __init__(self, time, event, X, weight):
        self.X = X
        self.w = weight
        self.ut, self.inv = np.unique(time, return_inverse=True)
        self.G = self.ut.size
        dw = weight * event
        self.D = np.bincount(self.inv, weights=dw, minlength=self.G)
        self.sum_dx = (dw[:, None] * X).sum(axis=0)
        self.ev = self.D > 0

    def _revcum(self, a):
        return np.cumsum(a[::-1], axis=0)[::-1]

    def _group(self, v):
        if v.ndim == 1:
            return np.bincount(self.inv, weights=v, minlength=self.G)
        out = np.zeros((self.G,) + v.shape[1:])
        np.add.at(out, self.inv, v)
        return out

    def loglik(self, beta):
        eta = self.X @ beta
        with np.errstate(over="ignore"):
            r = self.w * np.exp(eta)
        s0 = self._revcum(self._group(r))
        ev = self.ev
        return float(self.sum_dx @ beta - np.sum(self.D[ev] * np.log(s0[ev])))

    def derivatives(self, beta):
        X = self.X
        eta = X @ beta
        r = self.w * np.exp(eta)
        s0 = self._revcum(self._group(r))
        s1 = self._revcum(self._group(r[:, None] * X))
        s2 = self._revcum(self._group(r[:, None, None] * X[:, :, None] * X[:, None, :]))
        ev = self.ev
        D, s0e, s1e, s2e = self.D[ev], s0[ev], s1[ev], s2[ev]
        ll = float(self.sum_dx @ beta - np.sum(D * np.log(s0e)))
        mean = s1e / s0e[:, None]
        grad = self.sum_dx - (D[:, None] * mean).sum(axis=0)
        cov = s2e / s0e[:, None, None] - mean[:, :, None] * mean[:, None, :]
        hess = -(D[:, None, None] * cov).sum(axis=0)
        return ll, grad, hess, s0


def cox_partial_loglik(d: Dataset, beta) -> float:
    """Breslow partial log-likelihood at ``beta`` (for checking fits)."""
    return _CoxTerms(d.time, d.event, d.X, d.weight).loglik(np.atleast_1d(np.asarray(beta, float)))


def cox_fit(d: Dataset, tol: float = 1e-8, max_iter: int = 50, max_halvings: int = 30) -> CoxModel:
    """Newton-Raphson maximisation of the Breslow partial likelihood.

    Raises :class:`ConvergenceError` on non-convergence or a diverging
    (monotone) likelihood; the exception carries the last iterate.
    """
    if not np.any(d.event & (d.weight > 0)):
        raise NoEventsError("Cox model needs at least one event")
    center = np.average(d.X, axis=0, weights=d.weight)
    Xc = d.X - center
    terms = _CoxTerms(d.time, d.event, Xc, d.weight)
    beta = np.zeros(d.p)
    ll, grad, hess, s0 = terms.derivatives(beta)
    it = 0
    # overflowing trial steps are rejected by the halving loop
    failure = None
    with np.errstate(over="ignore", invalid="ignore"):
        while np.max(np.abs(grad)) >= tol:
            if it >= max_iter:
                failure = f"no convergence after {max_iter} Newton iterations"
                break
            it += 1
            try:
                step = np.linalg.solve(-hess, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(-hess, grad, rcond=None)[0]
            # near the optimum the gain is below rounding error; allow for that
            slack = 1e-12 * (1.0 + abs(ll))
            for _ in range(max_halvings + 1):
                cand = beta + step
                ll_new = terms.loglik(cand)
                if np.isfinite(ll_new) and ll_new >= ll - slack:
                    break
                step = step / 2
            else:
                failure = "Newton step halving failed to increase the partial likelihood"
                break
            beta = cand
            ll, grad, hess, s0 = terms.derivatives(beta)
    sd = Xc.std(axis=0)
    if failure is None:
        # an infinite maximiser shows as a flat gradient with a Newton step that stays O(1)
        try:
            remaining = np.linalg.solve(-hess, grad)
        except np.linalg.LinAlgError:
            remaining = np.zeros_like(beta)
        if np.any(np.abs(beta) * sd > 25) or np.any(np.abs(remaining) * sd > 1e-3):
            failure = "monotone likelihood: coefficients diverging"

    ev = terms.ev
    hazard = np.cumsum(terms.D[ev] / s0[ev])
    # s0 was computed on centred covariates, so the baseline belongs to x = center;
    # shifting it to x = 0 overflows once coefficients diverge
    base = StepFunction(terms.ut[ev], hazard, 0.0)
    model = CoxModel(np.array(beta), base, d.feature_names, ll, it, np.array(center))
    if failure is not None:
        raise ConvergenceError(failure, model)
    return model


def cox_survival(m: CoxModel, x) -> StepFunction:
    x = np.asarray(x, dtype=float)
    if x.shape != m.coefficients.shape:
        raise ValueError(f"expected {m.coefficients.size} covariates, got {x.size}")
    h = m.baseline_cumulative_hazard
    scale = m._scale(x)
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.where(h.values > 0, np.exp(-h.values * scale), 1.0)
    return StepFunction(h.knots, values, 1.0)


# -------------------------------------------------------------------- Weibull

@dataclass(frozen=True)
class WeibullAftModel:
    """log T = intercept + coefficients . x + exp(log_scale) * eps, eps ~ min-Gumbel."""

    intercept: float
    coefficients: np.ndarray
    log_scale: float

    @property
    def scale(self) -> float:
        return math.exp(self.log_scale)

    def location(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X, dtype=float) @ self.coefficients

    def survival(self, t, x):
        return weibull_survival(self, x)(t)

    def median(self, X) -> np.ndarray:
        return np.exp(self.location(X)) * math.log(2.0) ** self.scale

    def sample(self, X, rng: np.random.Generator) -> np.ndarray:
        eps = np.log(rng.standard_exponential(len(X)))  # min-Gumbel
        return np.exp(self.location(X) + self.scale * eps)


def weibull_survival(m: WeibullAftModel, x):
    """Return ``S(.|x)`` as a vectorised callable on t >= 0."""
    x = np.asarray(x, dtype=float)
    if x.shape != np.shape(m.coefficients):
        raise ValueError(f"expected {np.size(m.coefficients)} covariates, got {x.size}")
    lam = math.exp(float(m.intercept + x @ m.coefficients))
    shape = 1.0 / m.scale

    def surv(t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("t must be >= 0")
        out = np.exp(-((t / lam) ** shape))
        return float(out) if out.ndim == 0 else out

    return surv


def _weibull_terms(theta, logt, event, Z, w):
    a, log_s = theta[:-1], theta[-1]
    s = math.exp(log_s)
    # the scale can collapse on degenerate data; callers detect that case
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        z = (logt - Z @ a) / s
        ez = np.exp(z)
        ll = float(np.sum(w * (event * (-log_s - logt + z) - ez)))
        r = w * (event - ez)
        g_a = -(Z.T @ r) / s
        g_s = float(np.sum(w * (-event - z * (event - ez))))
        h_aa = -(Z.T * (w * ez)) @ Z / s**2
        h_as = (Z.T @ (w * (-z * ez + event - ez))) / s
        h_ss = float(np.sum(w * (z * (event - ez) - z**2 * ez)))
    k = Z.shape[1]
    hess = np.empty((k + 1, k + 1))
    hess[:k, :k] = h_aa
    hess[:k, k] = hess[k, :k] = h_as
    hess[k, k] = h_ss
    return ll, np.concatenate([g_a, [g_s]]), hess


def weibull_aft_loglik(d: Dataset | None, theta, *, time=None, event=None, X=None) -> float:
    if d is not None:
        time, event, X = d.time, d.event, d.X
    X = np.zeros((len(time), 0)) if X is None else np.asarray(X, float)
    Z = np.column_stack([np.ones(len(time)), X])
    return _weibull_terms(np.asarray(theta, float), np.log(time), np.asarray(event, float), Z, np.ones(len(time)))[0]


def weibull_aft_fit(d: Dataset | None = None, *, time=None, event=None, X=None, weight=None,
                    tol: float = 1e-6, max_iter: int = 200) -> WeibullAftModel:
    """Maximum likelihood for the right-censored Weibull AFT model.

    Pass a :class:`Dataset`, or arrays (``X`` may have zero columns).
    """
    if d is not None:
        time, event, X, weight = d.time, d.event, d.X, d.weight
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=float)
    X = np.zeros((time.size, 0)) if X is None else np.asarray(X, dtype=float).reshape(time.size, -1)
    w = np.ones(time.size) if weight is None else np.asarray(weight, dtype=float)
    if not np.any(event * w > 0):
        raise NoEventsError("Weibull fit needs at least one event")
    if np.any(time <= 0):
        raise ValueError("Weibull fit needs strictly positive times")
    logt = np.log(time)
    Z = np.column_stack([np.ones(time.size), X])
    spread = logt[event > 0].std() if np.sum(event > 0) > 1 else 0.0
    theta = np.zeros(Z.shape[1] + 1)
    theta[0] = np.average(logt, weights=w)
    theta[-1] = math.log(spread) if spread > 1e-3 else 0.0
    ll, grad, hess = _weibull_terms(theta, logt, event, Z, w)
    for _ in range(max_iter):
        if np.max(np.abs(grad)) < tol:
            break
        if theta[-1] < -15:
            break
        neg = -hess
        lam = 0.0
        while True:
            try:
                np.linalg.cholesky(neg + lam * np.eye(neg.shape[0]))
                break
            except np.linalg.LinAlgError:
                lam = max(2 * lam, 1e-6 * max(1.0, float(np.abs(neg).max())))
        step = np.linalg.solve(neg + lam * np.eye(neg.shape[0]), grad)
        for _ in range(31):
            cand = theta + step
            ll_new = _weibull_terms(cand, logt, event, Z, w)[0]
            if np.isfinite(ll_new) and ll_new >= ll:
                break
            step = step / 2
        else:
            break
        theta = cand
        ll, grad, hess = _weibull_terms(theta, logt, event, Z, w)
    model = WeibullAftModel(float(theta[0]), np.array(theta[1:-1]), float(theta[-1]))
    if theta[-1] < -15:
        raise ConvergenceError("degenerate data: Weibull scale collapsing to 0", model)
    if not np.max(np.abs(grad)) < tol:
        raise ConvergenceError("Weibull Newton iterations did not converge", model)
    return model
