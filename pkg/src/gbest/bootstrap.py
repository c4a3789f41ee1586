"""Resampling engines: Efron, Rubin, proper Bayesian and beta-Stacy bootstraps."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Dataset, DiscreteDistribution, as_generator

DATA, PRIOR = 0, 1


# ------------------------------------------------------------------ priors

@dataclass(frozen=True)
class CovariatePrior:
    """Univariate sampler: ``family`` is ``"uniform"`` (a, b) or ``"normal"`` (mean, sd)."""

    family: str
    a: float
    b: float

    def __post_init__(self):
        if self.family not in ("uniform", "normal"):
            raise ValueError(f"unknown prior family {self.family!r}")

    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if self.family == "uniform":
            return rng.uniform(self.a, self.b, size)
        return rng.normal(self.a, self.b, size)


@dataclass(frozen=True)
class PriorSpec:
    time_prior: DiscreteDistribution
    covariate_priors: tuple
    precision_k: float = 0.0

    def __post_init__(self):
        if not self.precision_k >= 0:
            raise ValueError("precision_k must be >= 0")
        object.__setattr__(self, "covariate_priors", tuple(self.covariate_priors))

    def with_precision(self, k: float) -> "PriorSpec":
        return PriorSpec(self.time_prior, self.covariate_priors, k)


def uniform_time_prior(max_time: float, n_atoms: int = 512, headroom: float = 1.5) -> DiscreteDistribution:
    """Equal masses on ``n_atoms`` evenly spaced points of (0, headroom * max_time]."""
    if not max_time > 0:
        raise ValueError("max_time must be positive")
    top = headroom * max_time
    atoms = top * np.arange(1, n_atoms + 1) / n_atoms
    return DiscreteDistribution(atoms, np.full(n_atoms, 1.0 / n_atoms))


def default_prior(d: Dataset, family: str = "uniform", k: float = 0.0, n_atoms: int = 512) -> PriorSpec:
    """Independent covariate priors fitted to the data range (uniform) or moments (normal)."""
    if family == "uniform":
        covs = [CovariatePrior("uniform", float(c.min()), float(c.max())) for c in d.X.T]
    elif family == "normal":
        covs = [CovariatePrior("normal", float(c.mean()), float(c.std(ddof=1)) if d.n > 1 else 1.0) for c in d.X.T]
    else:
        raise ValueError(f"unknown prior family {family!r}")
    return PriorSpec(uniform_time_prior(float(d.time.max()), n_atoms), covs, k)


def precision_from_weight(w: float, n: int) -> float:
    """k such that the prior weight k / (k + n) equals ``w``."""
    if not 0 <= w < 1:
        raise ValueError("prior weight must lie in [0, 1)")
    return w * n / (1.0 - w)


# ------------------------------------------------------------------ weights

def efron_weights(n: int, rng) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be positive")
    return as_generator(rng).multinomial(n, np.full(n, 1.0 / n))


def dirichlet_weights(concentration: float, m: int, rng) -> np.ndarray:
    """Symmetric Dirichlet(concentration, ..., concentration) of length m."""
    if not concentration > 0:
        raise ValueError("concentration must be positive")
    if m < 1:
        raise ValueError("m must be positive")
    g = as_generator(rng).standard_gamma(concentration, m)
    total = g.sum()
    if total == 0:
        # every gamma underflowed (tiny concentration); the limit is a random vertex
        g = np.zeros(m)
        g[as_generator(rng).integers(m)] = 1.0
        total = 1.0
    w = g / total
    # exact closure: absorb rounding into the largest weight
    w[np.argmax(w)] += 1.0 - w.sum()
    return w


def rubin_weights(n: int, rng) -> np.ndarray:
    return dirichlet_weights(1.0, n, rng)


# ------------------------------------------------------- proper Bayesian draw

@dataclass(frozen=True)
class MixtureDraw:
    X: np.ndarray
    time: np.ndarray  # nan for prior rows
    event: np.ndarray
    origin: np.ndarray  # DATA or PRIOR
    source_index: np.ndarray  # data row index, -1 for prior rows


def mixture_covariate_draw(d: Dataset, prior: PriorSpec, m: int, rng) -> MixtureDraw:
    """m rows from ((k + n)^-1)(k F0 + n Fn); prior rows have no label yet."""
    if m < 1:
        raise ValueError("m must be positive")
    if len(prior.covariate_priors) != d.p:
        raise ValueError("one covariate prior per feature is required")
    gen = as_generator(rng)
    n, k = d.n, prior.precision_k
    from_prior = gen.random(m) < k / (n + k)
    src = gen.integers(0, n, m)
    src[from_prior] = -1
    X = np.empty((m, d.p))
    data_rows = ~from_prior
    X[data_rows] = d.X[src[data_rows]]
    r = int(from_prior.sum())
    if r:
        X[from_prior] = np.column_stack([cp.sample(r, gen) for cp in prior.covariate_priors])
    time = np.full(m, np.nan)
    time[data_rows] = d.time[src[data_rows]]
    event = np.zeros(m, dtype=bool)
    event[data_rows] = d.event[src[data_rows]]
    return MixtureDraw(X, time, event, from_prior.astype(np.int8), src)


@dataclass(frozen=True)
class BootstrapReplica:
    """A labelled replica; ``weights`` sum to one."""

    X: np.ndarray
    time: np.ndarray
    event: np.ndarray
    origin: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        m = len(self.weights)
        if not (len(self.X) == len(self.time) == len(self.event) == len(self.origin) == m):
            raise ValueError("replica columns differ in length")
        if abs(float(np.sum(self.weights)) - 1.0) > 1e-12:
            raise ValueError("replica weights must sum to 1")

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def n_prior(self) -> int:
        return int(np.sum(self.origin == PRIOR))


# -------------------------------------------------------------- beta-Stacy

@dataclass(frozen=True)
class BetaStacyPosterior:
    """Posterior centering survival and precision on a grid.

    ``centering_survival[i]`` is the posterior survival at ``grid[i]``
    (right-continuous); ``precision[i]`` is c*(grid[i]), set to 0 where the
    centering survival has reached 0.
    """

    grid: np.ndarray
    centering_survival: np.ndarray
    precision: np.ndarray

    @property
    def centering_masses(self) -> np.ndarray:
        return -np.diff(np.concatenate(([1.0], self.centering_survival)))

    def centering_distribution(self) -> DiscreteDistribution:
        mass = np.clip(self.centering_masses, 0.0, None)
        keep = mass > 0
        return DiscreteDistribution(self.grid[keep], mass[keep])

    def precision_at(self, x) -> np.ndarray:
        idx = np.searchsorted(self.grid, x, side="right") - 1
        return self.precision[idx]


def beta_stacy_posterior(times, events, prior: PriorSpec) -> BetaStacyPosterior:
    """Conjugate update of a beta-Stacy prior BS(k, F0) by right-censored times.

    On the grid of observed times and prior atoms, with dN(s) events at s,
    Y(s) subjects at risk at s and Y+(s) strictly beyond s::

        S*(t) = prod_{s <= t} [1 - (k dF0(s) + dN(s)) / (k S0(s-) + Y(s))]
        c*(t) = (k S0(t) + Y+(t)) / S*(t)

    k = 0 gives the Kaplan-Meier curve; no censoring gives the Dirichlet
    posterior mean with c* = n + k.
    """
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    k = float(prior.precision_k)
    f0 = prior.time_prior
    grid = np.union1d(times, f0.atoms[f0.masses > 0])
    # prior pieces on the grid
    dF0 = np.zeros(grid.size)
    dF0[np.searchsorted(grid, f0.atoms)] += f0.masses
    S0 = np.clip(1.0 - np.cumsum(dF0), 0.0, 1.0)
    S0_minus = np.concatenate(([1.0], S0[:-1]))
    # data pieces on the grid
    pos = np.searchsorted(grid, times)
    dN = np.bincount(pos, weights=events.astype(float), minlength=grid.size)
    at_t = np.bincount(pos, minlength=grid.size).astype(float)
    Y = np.cumsum(at_t[::-1])[::-1]
    Y_plus = Y - at_t

    num = k * dF0 + dN
    den = k * S0_minus + Y
    with np.errstate(invalid="ignore", divide="ignore"):
        hazard = np.where(den > 0, num / den, 0.0)
    if np.any(hazard > 1 + 1e-12):
        raise ValueError("posterior hazard exceeds one; inconsistent prior")
    surv = np.cumprod(1.0 - np.clip(hazard, 0.0, 1.0))
    surv[surv < 1e-15] = 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        prec = np.where(surv > 0, (k * S0 + Y_plus) / np.where(surv > 0, surv, 1.0), 0.0)
    return BetaStacyPosterior(grid, surv, prec)


def _beta(a: np.ndarray, b: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    u = np.empty(a.shape)
    b_zero = b <= 0
    a_zero = (a <= 0) & ~b_zero
    mid = ~(b_zero | a_zero)
    u[b_zero] = 1.0
    u[a_zero] = 0.0
    if mid.any():
        u[mid] = gen.beta(a[mid], b[mid])
    return u


def stick_breaking(fractions: np.ndarray) -> np.ndarray:
    """Z_i = U_i * prod_{j<i} (1 - U_j)."""
    fractions = np.asarray(fractions, dtype=float)
    remaining = np.concatenate(([1.0], np.cumprod(1.0 - fractions)[:-1]))
    return fractions * remaining


def beta_stacy_draw(post: BetaStacyPosterior, m: int, rng) -> DiscreteDistribution:
    """One approximate draw of the random distribution from the beta-Stacy posterior.

    Samples ``m`` values from the centering, then builds Beta(alpha_i, beta_i)
    stick-breaking fractions on the D distinct values; the last fraction is
    1, so the masses close exactly.
    """
    if m < 1:
        raise ValueError("m must be positive")
    gen = as_generator(rng)
    centering = post.centering_distribution()
    idx = gen.choice(centering.atoms.size, size=m, p=centering.masses)
    counts = np.bincount(idx, minlength=centering.atoms.size)
    present = counts > 0
    atoms = centering.atoms[present]
    dFm = counts[present] / m
    tail = np.clip(1.0 - np.cumsum(dFm), 0.0, None)
    tail[-1] = 0.0
    c = post.precision_at(atoms)
    u = _beta(c * dFm, c * tail, gen)
    u[-1] = 1.0
    z = stick_breaking(u)
    return DiscreteDistribution(atoms, z)


def functional(g: DiscreteDistribution, hs: Sequence[Callable], combine: Callable):
    """Evaluate ``combine(G h_1, ..., G h_k)`` with ``G h = sum h(x_i) z_i``."""
    return combine(*(g.expect(h) for h in hs))


def sample_times(g: DiscreteDistribution, r: int, rng) -> np.ndarray:
    """r i.i.d. draws from g by inverse CDF."""
    if r == 0:
        return np.empty(0)
    u = as_generator(rng).random(r)
    cum = np.cumsum(g.masses)
    cum[-1] = 1.0
    return g.atoms[np.searchsorted(cum, u, side="right")]
