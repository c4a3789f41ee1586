"""Bagged survival-tree ensembles.

``gbest_fit`` grows the GBEST ensemble: each replica mixes
resampled training rows with covariate vectors drawn from a prior, gives the
prior rows event times sampled from a beta-Stacy posterior (matched to
covariates by Cox risk), and carries symmetric Dirichlet weights.  Predictions
pool the training rows sharing the query's leaf across all trees and take
their weighted Kaplan-Meier curve.

The same machinery provides the Weibull-label predecessor, plain Efron
bagging and a random survival forest.
"""
from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .bootstrap import (
    DATA,
    PRIOR,
    BootstrapReplica,
    CovariatePrior,
    PriorSpec,
    beta_stacy_draw,
    beta_stacy_posterior,
    default_prior,
    dirichlet_weights,
    efron_weights,
    mixture_covariate_draw,
    precision_from_weight,
    sample_times,
)
from .core import Dataset, DiscreteDistribution, SeededRngStream, StepFunction, as_generator
from .estimators import ConvergenceError, CoxModel, WeibullAftModel, cox_fit, kaplan_meier, weibull_aft_fit
from .tree import SurvivalTree, TreeParams, fit_survival_tree

log = logging.getLogger(__name__)

VARIANTS = ("beta_stacy_labels", "weibull_labels", "efron_bagging")
FORMAT_TAG = "gbest-model/1"


@dataclass(frozen=True)
class GbestConfig:
    B: int = 100
    prior_weight_w: float = 0.1
    prior: str | PriorSpec = "uniform"
    m: int | None = None
    tree_params: TreeParams = TreeParams()
    variant: str = "beta_stacy_labels"
    time_prior_atoms: int = 512

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be positive")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not 0 <= self.prior_weight_w < 1:
            raise ValueError("prior weight must lie in [0, 1)")
        if self.prior_weight_w > 0.3:
            warnings.warn(
                f"prior weight {self.prior_weight_w} > 0.3 tends to inflate error and variability",
                stacklevel=2,
            )
        if self.m is not None and self.m < 1:
            raise ValueError("m must be positive")


def _stream(rng) -> SeededRngStream:
    if isinstance(rng, SeededRngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return SeededRngStream(int(rng))
    raise TypeError("ensemble fitting needs a SeededRngStream or integer seed")


def match_times_to_covariates(X_prior, times, scorer: CoxModel | None, rng) -> np.ndarray:
    """Assign sorted times to rows by descending risk: highest risk gets the earliest time.

    Returns the time for each row of ``X_prior`` (in input order).  Equal
    scores are ordered at random; ``scorer=None`` gives a fully random match.
    """
    X_prior = np.asarray(X_prior, dtype=float)
    times = np.asarray(times, dtype=float)
    if X_prior.shape[0] != times.size:
        raise ValueError(f"{X_prior.shape[0]} covariate rows but {times.size} times")
    r = times.size
    if r == 0:
        return np.empty(0)
    score = np.zeros(r) if scorer is None else scorer.risk_score(X_prior)
    jitter = as_generator(rng).random(r)
    order = np.lexsort((jitter, -score))
    out = np.empty(r)
    out[order] = np.sort(times)
    return out


@dataclass
class GbestModel:
    trees: list
    replicas: list
    config: GbestConfig
    feature_names: tuple
    matcher: CoxModel | None = None
    labeller: WeibullAftModel | None = None
    notes: list = field(default_factory=list)

    @property
    def B(self) -> int:
        return len(self.trees)

    def leaves(self, X) -> np.ndarray:
        """(n_rows, B) leaf ids."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([t.apply(X) for t in self.trees])

    def pooled_members(self, x):
        """Time, event and weight of every training row sharing a leaf with ``x``."""
        x = np.asarray(x, dtype=float)
        if x.shape != (len(self.feature_names),):
            raise ValueError(f"expected {len(self.feature_names)} covariates, got {x.size}")
        leaves = self.leaves(x[None, :])[0]
        parts = [t.members(int(lf)) for t, lf in zip(self.trees, leaves)]
        return tuple(np.concatenate(c) for c in zip(*parts))

    def predict_survival(self, X) -> list[StepFunction]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} covariates, got {X.shape[1]}")
        leaf_ids = self.leaves(X)
        out = []
        for row in leaf_ids:
            parts = [t.members(int(lf)) for t, lf in zip(self.trees, row)]
            out.append(kaplan_meier(*(np.concatenate(c) for c in zip(*parts))))
        return out


def gbest_predict_survival(model: GbestModel, x) -> StepFunction:
    x = np.asarray(x, dtype=float)
    if x.shape != (len(model.feature_names),):
        raise ValueError(f"expected {len(model.feature_names)} covariates, got {x.size}")
    return model.predict_survival(x[None, :])[0]


def _grow(replica: BootstrapReplica, params: TreeParams, gen, names) -> SurvivalTree:
    eff = replica.weights * replica.m
    if not np.any(replica.event & (eff > 0)):
        # no events to split on: a single leaf (its curve is identically 1)
        n = replica.m
        return SurvivalTree([-1], [np.nan], [-1], [-1], [0], [np.arange(n)], replica.time,
                            replica.event, eff, params, names, replica.X.shape[1])
    return fit_survival_tree(replica.X, replica.time, replica.event, eff, params, gen, names)


def _resolve_prior(train: Dataset, cfg: GbestConfig, k: float) -> PriorSpec:
    if isinstance(cfg.prior, PriorSpec):
        return cfg.prior.with_precision(k)
    return default_prior(train, cfg.prior, k, cfg.time_prior_atoms)


def _fit_labeller(train: Dataset, notes) -> WeibullAftModel:
    try:
        return weibull_aft_fit(train)
    except ConvergenceError as err:
        notes.append(f"weibull labeller: {err}; using last iterate")
        if err.model is not None and np.all(np.isfinite(err.model.coefficients)):
            return err.model
    model = weibull_aft_fit(time=train.time, event=train.event)
    return WeibullAftModel(model.intercept, np.zeros(train.p), model.log_scale)


def gbest_fit(train: Dataset, cfg: GbestConfig, rng) -> GbestModel:
    """Fit B trees, replica b drawn from ``rng.substream(b)``."""
    if not np.any(train.event):
        raise ValueError("training data contain no events")
    stream = _stream(rng)
    n = train.n
    m = cfg.m or n
    names = train.feature_names
    notes: list[str] = []
    trees, replicas = [], []

    if cfg.variant == "efron_bagging":
        for b in range(cfg.B):
            gen = stream.substream(b).generator()
            counts = efron_weights(n, gen)
            rep = BootstrapReplica(train.X, train.time, train.event, np.zeros(n, np.int8), counts / n)
            replicas.append(rep)
            trees.append(_grow(rep, cfg.tree_params, gen, names))
        return GbestModel(trees, replicas, cfg, names, notes=notes)

    k = precision_from_weight(cfg.prior_weight_w, n)
    prior = _resolve_prior(train, cfg, k)

    matcher = labeller = posterior = None
    if k > 0:
        if cfg.variant == "beta_stacy_labels":
            try:
                matcher = cox_fit(train)
            except (ConvergenceError, ValueError) as err:
                notes.append(f"cox matcher failed ({err}); matching prior rows at random")
                log.info("GBEST: %s", notes[-1])
            posterior = beta_stacy_posterior(train.time, train.event, prior)
        else:
            labeller = _fit_labeller(train, notes)

    for b in range(cfg.B):
        gen = stream.substream(b).generator()
        draw = mixture_covariate_draw(train, prior, m, gen)
        weights = dirichlet_weights((n + k) / m, m, gen)
        time, event = draw.time.copy(), draw.event.copy()
        is_prior = draw.origin == PRIOR
        r = int(is_prior.sum())
        if r:
            if posterior is not None:
                g = beta_stacy_draw(posterior, m, gen)
                taus = sample_times(g, r, gen)
                time[is_prior] = match_times_to_covariates(draw.X[is_prior], taus, matcher, gen)
            else:
                time[is_prior] = labeller.median(draw.X[is_prior])
            event[is_prior] = True
        rep = BootstrapReplica(draw.X, time, event, draw.origin, weights)
        replicas.append(rep)
        trees.append(_grow(rep, cfg.tree_params, gen, names))
    return GbestModel(trees, replicas, cfg, names, matcher, labeller, notes)


# ---------------------------------------------------------------- forest

@dataclass
class RsfModel:
    trees: list
    feature_names: tuple

    def predict_cumulative_hazard(self, X) -> list[StepFunction]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} covariates, got {X.shape[1]}")
        leaf_ids = np.column_stack([t.apply(X) for t in self.trees])
        out = []
        for row in leaf_ids:
            curves = [t.leaf_cumulative_hazard(int(lf)) for t, lf in zip(self.trees, row)]
            knots = np.unique(np.concatenate([c.knots for c in curves]))
            H = np.mean([c(knots) for c in curves], axis=0) if knots.size else knots
            out.append(StepFunction(knots, H, 0.0))
        return out

    def predict_survival(self, X) -> list[StepFunction]:
        return [StepFunction(h.knots, np.exp(-h.values), 1.0) for h in self.predict_cumulative_hazard(X)]


def rsf_fit(train: Dataset, B: int = 100, tree_params: TreeParams | None = None, rng=0) -> RsfModel:
    """Efron-bootstrap trees with per-split feature subsampling."""
    if not np.any(train.event):
        raise ValueError("training data contain no events")
    if tree_params is None:
        tree_params = TreeParams()
    if tree_params.mtry is None:
        tree_params = replace(tree_params, mtry=math.ceil(math.sqrt(train.p)))
    stream = _stream(rng)
    n = train.n
    trees = []
    for b in range(B):
        gen = stream.substream(b).generator()
        counts = efron_weights(n, gen)
        rep = BootstrapReplica(train.X, train.time, train.event, np.zeros(n, np.int8), counts / n)
        trees.append(_grow(rep, tree_params, gen, train.feature_names))
    return RsfModel(trees, train.feature_names)


def rsf_predict_survival(model: RsfModel, x) -> StepFunction:
    return model.predict_survival(np.asarray(x, dtype=float)[None, :])[0]


# ---------------------------------------------------------------- persistence

def _prior_to_dict(prior):
    if isinstance(prior, str):
        return prior
    return {
        "time_atoms": prior.time_prior.atoms.tolist(),
        "time_masses": prior.time_prior.masses.tolist(),
        "covariates": [asdict(c) for c in prior.covariate_priors],
        "k": prior.precision_k,
    }


def _prior_from_dict(obj):
    if isinstance(obj, str):
        return obj
    return PriorSpec(
        DiscreteDistribution(obj["time_atoms"], obj["time_masses"]),
        [CovariatePrior(**c) for c in obj["covariates"]],
        obj["k"],
    )


def save_model(model: GbestModel, path) -> None:
    """Write a JSON dump tagged with the format version."""
    cfg = model.config
    doc = {
        "format": FORMAT_TAG,
        "config": {
            "B": cfg.B,
            "prior_weight_w": cfg.prior_weight_w,
            "prior": _prior_to_dict(cfg.prior),
            "m": cfg.m,
            "tree_params": asdict(cfg.tree_params),
            "variant": cfg.variant,
            "time_prior_atoms": cfg.time_prior_atoms,
        },
        "feature_names": list(model.feature_names),
        "matcher": None if model.matcher is None else {
            "coefficients": model.matcher.coefficients.tolist(),
            "knots": model.matcher.baseline_cumulative_hazard.knots.tolist(),
            "hazard": model.matcher.baseline_cumulative_hazard.values.tolist(),
            "center": None if model.matcher.center is None else model.matcher.center.tolist(),
        },
        "labeller": None if model.labeller is None else {
            "intercept": model.labeller.intercept,
            "coefficients": np.asarray(model.labeller.coefficients).tolist(),
            "log_scale": model.labeller.log_scale,
        },
        "notes": model.notes,
        "replicas": [
            {
                "X": rep.X.tolist(),
                "time": rep.time.tolist(),
                "event": rep.event.astype(int).tolist(),
                "origin": rep.origin.astype(int).tolist(),
                "weights": rep.weights.tolist(),
            }
            for rep in model.replicas
        ],
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": [None if np.isnan(v) else v for v in t.threshold.tolist()],
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "leaf_index": t.leaf_index.tolist(),
                "leaves": [lf.tolist() for lf in t.leaves],
            }
            for t in model.trees
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path) -> GbestModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT_TAG:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    c = doc["config"]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = GbestConfig(c["B"], c["prior_weight_w"], _prior_from_dict(c["prior"]), c["m"],
                          TreeParams(**c["tree_params"]), c["variant"], c["time_prior_atoms"])
    names = tuple(doc["feature_names"])
    p = len(names)
    replicas, trees = [], []
    for r, t in zip(doc["replicas"], doc["trees"]):
        rep = BootstrapReplica(np.array(r["X"], dtype=float).reshape(-1, p), np.array(r["time"], dtype=float),
                               np.array(r["event"], dtype=bool), np.array(r["origin"], dtype=np.int8),
                               np.array(r["weights"], dtype=float))
        replicas.append(rep)
        thr = [np.nan if v is None else v for v in t["threshold"]]
        trees.append(SurvivalTree(t["feature"], thr, t["left"], t["right"], t["leaf_index"], t["leaves"],
                                  rep.time, rep.event, rep.weights * rep.m, cfg.tree_params, names, p))
    matcher = None
    if doc["matcher"] is not None:
        mt = doc["matcher"]
        center = None if mt.get("center") is None else np.array(mt["center"])
        matcher = CoxModel(np.array(mt["coefficients"]), StepFunction(mt["knots"], mt["hazard"], 0.0), names,
                           center=center)
    labeller = None
    if doc["labeller"] is not None:
        lb = doc["labeller"]
        labeller = WeibullAftModel(lb["intercept"], np.array(lb["coefficients"]), lb["log_scale"])
    return GbestModel(trees, replicas, cfg, names, matcher, labeller, doc["notes"])
