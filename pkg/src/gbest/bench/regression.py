"""Linear model of logit(IBS) on the simulation factors, with bootstrap intervals."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..core import as_generator
from ..metrics import logit
from .models import ModelSpec

REFERENCE_MODEL = "gbest_bsb w=0.1"


class RankDeficientError(ValueError):
    def __init__(self, columns):
        super().__init__(f"rank-deficient design; dependent columns: {', '.join(columns)}")
        self.columns = list(columns)


@dataclass(frozen=True)
class Coefficient:
    name: str
    coefficient: float
    sd: float
    lower: float
    upper: float


@dataclass(frozen=True)
class RegressionReport:
    coefficients: tuple
    n_obs: int
    bootstrap_reps: int

    def __getitem__(self, name) -> Coefficient:
        for c in self.coefficients:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.coefficients]

    def to_text(self) -> str:
        lines = [f"{'':24s}{'coefficient':>12s}{'sd':>10s}{'lower':>10s}{'upper':>10s}"]
        for c in self.coefficients:
            lines.append(f"{c.name:24s}{c.coefficient:12.4f}{c.sd:10.4f}{c.lower:10.4f}{c.upper:10.4f}")
        lines.append(f"n = {self.n_obs}, bootstrap replicates = {self.bootstrap_reps}")
        return "\n".join(lines)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["term", "coefficient", "sd", "lower", "upper"])
            for c in self.coefficients:
                w.writerow([c.name, repr(c.coefficient), repr(c.sd), repr(c.lower), repr(c.upper)])


def dependent_columns(X: np.ndarray, names) -> list[str]:
    """Columns that are linear combinations of the columns before them."""
    bad, basis = [], np.empty((X.shape[0], 0))
    scale = max(1.0, float(np.abs(X).max()))
    for j, name in enumerate(names):
        cand = np.column_stack([basis, X[:, j]])
        if np.linalg.matrix_rank(cand, tol=1e-9 * scale * max(cand.shape)) > basis.shape[1]:
            basis = cand
        else:
            bad.append(name)
    return bad


def fit_regression(X, y, names, bootstrap_reps: int = 1000, rng=0) -> RegressionReport:
    """OLS plus case-resampling bootstrap sd and 2.5/97.5 percentile intervals."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    bad = dependent_columns(X, names)
    if bad:
        raise RankDeficientError(bad)
    beta = np.linalg.lstsq(X, y, rcond=None)[0]
    gen = as_generator(rng)
    n = len(y)
    boot = np.empty((bootstrap_reps, X.shape[1]))
    for b in range(bootstrap_reps):
        idx = gen.integers(0, n, n)
        boot[b] = np.linalg.lstsq(X[idx], y[idx], rcond=None)[0]
    if bootstrap_reps > 1:
        sd = boot.std(axis=0, ddof=1)
        lo, hi = np.quantile(boot, [0.025, 0.975], axis=0)
    else:
        sd = lo = hi = np.full(X.shape[1], np.nan)
    coefs = tuple(Coefficient(nm, float(b), float(s), float(l), float(h))
                  for nm, b, s, l, h in zip(names, beta, sd, lo, hi))
    return RegressionReport(coefs, n, bootstrap_reps)


def _dummies(values, reference, prefix):
    levels = sorted(set(values) - {reference})
    cols = [np.array([v == lv for v in values], dtype=float) for lv in levels]
    return cols, [f"{prefix} {lv}" for lv in levels]


def design_from_rows(rows: list[dict], reference_model: str = REFERENCE_MODEL):
    """(X, y, names) for logit(IBS) ~ N + cens + model + prior + covariate."""
    rows = [r for r in rows if r["ibs"] is not None]
    if not rows:
        raise ValueError("no usable result rows")
    labels = [ModelSpec(r["model"], r["w"]).label for r in rows]
    if reference_model not in labels:
        raise ValueError(f"reference model {reference_model!r} absent from results")
    if len(set(labels)) < 2 or len({r["setting_id"] for r in rows}) < 2:
        raise ValueError("regression needs at least two models and two settings")
    cols = [np.ones(len(rows))]
    names = ["(Intercept)"]
    for field, name in (("N", "N"), ("cens_target", "cens")):
        v = np.array([r[field] for r in rows], dtype=float)
        if np.ptp(v) > 0:
            cols.append(v)
            names.append(name)
    for values, ref, prefix in (
        (labels, reference_model, "model"),
        ([r["prior"] for r in rows], "normal", "prior"),
        ([r["cov_family"] for r in rows], "normal(0,1)", "covariate"),
    ):
        if len(set(values)) < 2:
            continue
        ref = ref if ref in values else sorted(set(values))[0]
        c, n = _dummies(values, ref, prefix)
        cols += c
        names += n
    y = np.array([logit(r["ibs"]) for r in rows])
    return np.column_stack(cols), y, names


def analyze_regression(rows: list[dict], bootstrap_reps: int = 1000, rng=0,
                       reference_model: str = REFERENCE_MODEL) -> RegressionReport:
    X, y, names = design_from_rows(rows, reference_model)
    return fit_regression(X, y, names, bootstrap_reps, rng)
