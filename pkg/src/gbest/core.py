"""Domain types shared by every other module.

Survival data is kept column-wise (``time``, ``event``, ``X``, ``weight``)
because nearly every consumer is vectorised; :class:`TimeToEventRecord`
exists for row-wise construction and inspection.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class DataError(ValueError):
    """Malformed or inconsistent input data."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeToEventRecord:
    time: float
    event: bool
    covariates: tuple
    weight: float = 1.0

    def __post_init__(self):
        if not self.time >= 0:
            raise DataError(f"time must be >= 0, got {self.time}")
        if not self.weight >= 0:
            raise DataError(f"weight must be >= 0, got {self.weight}")
        object.__setattr__(self, "covariates", tuple(float(v) for v in self.covariates))


class Dataset:
    """Right-censored survival data: N subjects, p numeric covariates."""

    def __init__(self, time, event, X, feature_names: Sequence[str], weight=None):
        time = np.asarray(time, dtype=float)
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if len(feature_names) == 1 else X.reshape(len(time), -1)
        n = time.shape[0]
        if n == 0:
            raise DataError("dataset must contain at least one record")
        if len(feature_names) == 0:
            raise DataError("dataset needs at least one feature")
        if X.shape != (n, len(feature_names)):
            raise DataError(
                f"covariate matrix has shape {X.shape}, expected ({n}, {len(feature_names)})"
            )
        if np.any(~np.isfinite(time)) or np.any(time < 0):
            raise DataError("times must be finite and >= 0")
        if np.any(~np.isfinite(X)):
            raise DataError("covariates must be finite")
        weight = np.ones(n) if weight is None else np.asarray(weight, dtype=float)
        if weight.shape != (n,) or np.any(weight < 0):
            raise DataError("weights must be a nonnegative vector of length N")
        self.time = _frozen(time)
        self.event = _frozen(event, dtype=bool)
        if self.event.shape != (n,):
            raise DataError("event vector length differs from time vector")
        self.X = _frozen(X)
        self.weight = _frozen(weight)
        self.feature_names = tuple(str(f) for f in feature_names)

    @classmethod
    def from_records(cls, records: Iterable[TimeToEventRecord], feature_names: Sequence[str]):
        records = list(records)
        if not records:
            raise DataError("dataset must contain at least one record")
        p = len(feature_names)
        for i, r in enumerate(records):
            if len(r.covariates) != p:
                raise DataError(f"record {i} has {len(r.covariates)} covariates, expected {p}")
        return cls(
            [r.time for r in records],
            [r.event for r in records],
            np.array([r.covariates for r in records], dtype=float).reshape(len(records), p),
            feature_names,
            [r.weight for r in records],
        )

    @property
    def n(self) -> int:
        return self.time.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def __len__(self):
        return self.n

    @property
    def records(self) -> list[TimeToEventRecord]:
        return [
            TimeToEventRecord(float(t), bool(e), tuple(x), float(w))
            for t, e, x, w in zip(self.time, self.event, self.X, self.weight)
        ]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.time[idx], self.event[idx], self.X[idx], self.feature_names, self.weight[idx])

    def censoring_fraction(self) -> float:
        return float(np.count_nonzero(~self.event) / self.n)

    def __repr__(self):
        return f"Dataset(N={self.n}, p={self.p}, events={int(self.event.sum())})"


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous piecewise-constant function on [0, inf).

    ``f(t)`` is the value at the largest knot ``<= t``, or
    ``value_before_first_knot`` when ``t`` precedes every knot.
    """

    knots: np.ndarray
    values: np.ndarray
    value_before_first_knot: float = 1.0

    def __post_init__(self):
        knots = _frozen(self.knots)
        values = _frozen(self.values)
        if knots.ndim != 1 or knots.shape != values.shape:
            raise ValueError("knots and values must be 1-d arrays of equal length")
        if knots.size and (np.any(np.diff(knots) <= 0) or knots[0] < 0):
            raise ValueError("knots must be strictly increasing and nonnegative")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "value_before_first_knot", float(self.value_before_first_knot))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("step functions are defined on t >= 0")
        pos = np.searchsorted(self.knots, t, side="right") - 1
        padded = np.concatenate(([self.value_before_first_knot], self.values))
        out = padded[pos + 1]
        return float(out) if out.ndim == 0 else out

    def is_survival_curve(self, atol: float = 1e-12) -> bool:
        v = self.values
        return (
            self.value_before_first_knot == 1.0
            and bool(np.all(v >= -atol))
            and bool(np.all(v <= 1 + atol))
            and bool(np.all(np.diff(np.concatenate(([1.0], v))) <= atol))
        )


def step_eval(f: StepFunction, t: float) -> float:
    return f(t)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finite distribution on sorted distinct atoms; masses are renormalised."""

    atoms: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if atoms.ndim != 1 or atoms.shape != masses.shape or atoms.size == 0:
            raise ValueError("atoms and masses must be nonempty 1-d arrays of equal length")
        if np.any(np.diff(atoms) <= 0):
            raise ValueError("atoms must be strictly increasing")
        if np.any(masses < 0) or masses.sum() <= 0:
            raise ValueError("masses must be nonnegative with positive total")
        masses = masses / masses.sum()
        object.__setattr__(self, "atoms", _frozen(atoms))
        object.__setattr__(self, "masses", _frozen(masses))

    def cdf(self, x):
        cum = np.cumsum(self.masses)
        pos = np.searchsorted(self.atoms, x, side="right") - 1
        return np.where(pos >= 0, cum[np.maximum(pos, 0)], 0.0)

    def expect(self, h) -> float:
        """Integral of ``h`` against the distribution."""
        return float(np.sum(h(self.atoms) * self.masses))


@dataclass(frozen=True)
class SeededRngStream:
    """Reproducible random stream addressed by ``(master_seed, path, stream_index)``.

    Two streams with different addresses are statistically independent
    (``numpy.random.SeedSequence`` spawn keys); asking the same stream for a
    generator twice yields the same sequence.
    """

    master_seed: int
    stream_index: int = 0
    path: tuple = field(default=())

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be nonnegative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=(*self.path, int(self.stream_index)))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, index: int) -> "SeededRngStream":
        return SeededRngStream(self.master_seed, int(index), (*self.path, int(self.stream_index)))


def as_generator(rng) -> np.random.Generator:
    """Accept a :class:`SeededRngStream`, a ``Generator`` or an int seed."""
    if isinstance(rng, SeededRngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, (int, np.integer)):
        return SeededRngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


# --------------------------------------------------------------------------- io

@dataclass(frozen=True)
class CsvSchema:
    time: str = "time"
    status: str = "status"
    covariates: tuple = ()


def load_csv(path, schema: CsvSchema | Mapping) -> Dataset:
    """Read a header-first comma-separated file into a :class:`Dataset`.

    When ``schema.covariates`` is empty every column other than time and
    status is used.
    """
    if isinstance(schema, Mapping):
        schema = CsvSchema(**schema)
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        covariates = tuple(schema.covariates) or tuple(
            h for h in header if h not in (schema.time, schema.status)
        )
        if not covariates:
            raise DataError(f"{path}: no covariate columns")
        for name in (schema.time, schema.status, *covariates):
            if name not in header:
                raise DataError(f"{path}: unknown column {name!r}")
        cols = [header.index(c) for c in (schema.time, schema.status, *covariates)]
        names = (schema.time, schema.status, *covariates)
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not c.strip() for c in raw):
                continue
            vals = []
            for ci, name in zip(cols, names):
                cell = raw[ci].strip() if ci < len(raw) else ""
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {lineno}, column {name!r}: cannot parse {cell!r}") from None
                if not np.isfinite(v):
                    raise DataError(f"{path}: row {lineno}, column {name!r}: non-finite value")
                vals.append(v)
            if vals[0] < 0:
                raise DataError(f"{path}: row {lineno}, column {schema.time!r}: negative time")
            if vals[1] not in (0.0, 1.0):
                raise DataError(f"{path}: row {lineno}, column {schema.status!r}: status must be 0 or 1")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows)
    return Dataset(arr[:, 0], arr[:, 1] == 1.0, arr[:, 2:], covariates)


def write_csv(d: Dataset, path, time_col: str = "time", status_col: str = "status") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([time_col, status_col, *d.feature_names])
        for t, e, x in zip(d.time, d.event, d.X):
            w.writerow([repr(float(t)), int(e), *(repr(float(v)) for v in x)])


# --------------------------------------------------------------------- splits

def split_train_test(d: Dataset, train_fraction: float, rng) -> tuple[Dataset, Dataset]:
    if d.n < 2:
        raise DataError("need at least two records to split")
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    # round half up: 75 * 0.5 -> 38 train rows
    n_train = int(np.floor(train_fraction * d.n + 0.5))
    n_train = min(max(n_train, 1), d.n - 1)
    perm = as_generator(rng).permutation(d.n)
    return d.subset(np.sort(perm[:n_train])), d.subset(np.sort(perm[n_train:]))


def kfold_indices(n: int, k: int, rng) -> list[tuple[np.ndarray, np.ndarray]]:
    """(train, test) index pairs; test folds partition ``range(n)``."""
    if k < 2 or k > n:
        raise DataError(f"k-fold needs 2 <= k <= N, got k={k}, N={n}")
    folds = np.array_split(as_generator(rng).permutation(n), k)
    return [
        (np.sort(np.concatenate([folds[j] for j in range(k) if j != i])), np.sort(folds[i]))
        for i in range(k)
    ]


def kfold(d: Dataset, k: int, rng) -> list[tuple[Dataset, Dataset]]:
    return [(d.subset(tr), d.subset(te)) for tr, te in kfold_indices(d.n, k, rng)]
