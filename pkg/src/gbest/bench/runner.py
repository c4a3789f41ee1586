"""Simulation grid and real-data cross-validation runners.

Random streams are addressed by content, not by loop position:

* censoring threshold: ``seed / 3 / crc(cens, family)``
* dataset:             ``seed / 1 / crc(N, cens, family) / rep``
* model fit:           ``seed / 2 / crc(N, cens, family, prior) / rep / crc(model label)``
* real-data folds:     ``seed / 4`` and fits ``seed / 5 / fold / crc(model label)``

so adding a model or a setting leaves every other row unchanged, and rows
do not depend on execution order or the number of worker processes.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import time as _time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..core import CsvSchema, Dataset, SeededRngStream, kfold_indices, load_csv, split_train_test
from ..metrics import integrated_brier, summarize
from ..sim import SimConfig, calibrate_censoring, simulate_dataset
from ..tree import TreeParams
from .config import RESULT_COLUMNS, GridSpec
from .models import ModelSpec, expand_models, fit_predict

log = logging.getLogger(__name__)


def key_index(*parts) -> int:
    """Stable 32-bit stream index for a tuple of labels."""
    return zlib.crc32("|".join(str(p) for p in parts).encode())


def fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


@dataclass(frozen=True)
class _Cell:
    order: int
    N: int
    cens: float
    family: str
    prior: str
    rep: int
    threshold: float
    models: tuple
    seed: int
    B: int
    tree_params: TreeParams
    p: int
    timing: bool


def _checked_ibs(curves, test) -> float:
    ibs = integrated_brier(curves, test).ibs
    if not 0.0 <= ibs <= 1.0:
        raise ValueError(f"IBS {ibs} outside [0, 1]")
    return ibs


def _setting_id(N, cens, family, prior) -> str:
    return f"N{N}_c{cens:g}_{family}_{prior}"


def _run_cell(cell: _Cell) -> list[dict]:
    master = SeededRngStream(cell.seed)
    cfg = SimConfig(n=cell.N, p=cell.p, covariate_family=cell.family, target_censoring=cell.cens)
    data_stream = master.substream(1).substream(key_index(cell.N, cell.cens, cell.family)).substream(cell.rep)
    d = simulate_dataset(cfg, data_stream, cell.threshold)
    train, test = split_train_test(d, 0.5, data_stream.substream(2))
    fit_root = (master.substream(2).substream(key_index(cell.N, cell.cens, cell.family, cell.prior))
                .substream(cell.rep))
    rows = []
    for spec in cell.models:
        row = {
            "setting_id": _setting_id(cell.N, cell.cens, cell.family, cell.prior),
            "N": cell.N,
            "cens_target": cell.cens,
            "cens_realized": d.censoring_fraction(),
            "model": spec.name,
            "w": spec.w,
            "prior": cell.prior,
            "cov_family": cell.family,
            "rep": cell.rep,
            "ibs": None,
            "runtime_ms": None,
            "error": "",
        }
        t0 = _time.perf_counter()
        try:
            curves, warning = fit_predict(spec, train, test, fit_root.substream(key_index(spec.label)),
                                          B=cell.B, prior=cell.prior, tree_params=cell.tree_params)
            row["ibs"] = _checked_ibs(curves, test)
            row["error"] = warning
        except Exception as err:  # recorded per row; the grid keeps going
            row["error"] = f"{type(err).__name__}: {err}"
        if cell.timing:
            row["runtime_ms"] = round((_time.perf_counter() - t0) * 1000.0, 1)
        rows.append(row)
    return rows


def grid_cells(spec: GridSpec, seed: int, timing: bool = False) -> list[_Cell]:
    master = SeededRngStream(seed)
    models = tuple(expand_models(spec.models, spec.prior_weights))
    thresholds = {}
    for cens in spec.censoring_levels:
        for fam in spec.covariate_families:
            cfg = SimConfig(n=2, p=spec.p, covariate_family=fam, target_censoring=cens)
            thresholds[cens, fam] = calibrate_censoring(cfg, cens, master.substream(3).substream(key_index(cens, fam)))
    cells = []
    for N in spec.sample_sizes:
        for cens in spec.censoring_levels:
            for fam in spec.covariate_families:
                for prior in spec.priors:
                    for rep in range(spec.replications):
                        cells.append(_Cell(len(cells), N, cens, fam, prior, rep, thresholds[cens, fam], models,
                                           seed, spec.B, spec.tree_params, spec.p, timing))
    return cells


def _execute(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(c) for c in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=1))


def write_rows(rows: Iterable[dict], path=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for row in rows:
        writer.writerow([fmt(row[c]) for c in RESULT_COLUMNS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def run_grid(spec: GridSpec, seed: int, out=None, jobs: int = 1, timing: bool = False) -> list[dict]:
    """Simulate, split 50/50, fit every model, score test IBS; rows in canonical order.

    ``runtime_ms`` is filled only with ``timing=True`` since wall-clock
    times would break byte-identical reruns.
    """
    cells = grid_cells(spec, seed, timing)
    rows = [r for chunk in _execute(_run_cell, cells, jobs) for r in chunk]
    if out is not None:
        write_rows(rows, out)
    return rows


# ----------------------------------------------------------------- real data

@dataclass(frozen=True)
class _Fold:
    fold: int
    train_idx: np.ndarray
    test_idx: np.ndarray
    spec: ModelSpec
    seed: int
    B: int
    prior: str
    tree_params: TreeParams
    data: Dataset
    setting_id: str
    timing: bool


def _run_fold(job: _Fold) -> dict:
    d = job.data
    train, test = d.subset(job.train_idx), d.subset(job.test_idx)
    stream = SeededRngStream(job.seed).substream(5).substream(job.fold).substream(key_index(job.spec.label))
    row = {
        "setting_id": job.setting_id, "N": d.n, "cens_target": None, "cens_realized": d.censoring_fraction(),
        "model": job.spec.name, "w": job.spec.w, "prior": job.prior, "cov_family": "", "rep": job.fold,
        "ibs": None, "runtime_ms": None, "error": "",
    }
    t0 = _time.perf_counter()
    try:
        curves, warning = fit_predict(job.spec, train, test, stream, B=job.B, prior=job.prior,
                                      tree_params=job.tree_params)
        row["ibs"] = _checked_ibs(curves, test)
        row["error"] = warning
    except Exception as err:
        row["error"] = f"{type(err).__name__}: {err}"
    if job.timing:
        row["runtime_ms"] = round((_time.perf_counter() - t0) * 1000.0, 1)
    return row


@dataclass(frozen=True)
class CvSummary:
    label: str
    mean: float
    sd: float
    lower: float
    upper: float
    folds: int


def summarize_cv(rows: list[dict]) -> list[CvSummary]:
    """Mean, sd and mean +/- 1.96 sd / sqrt(k) per model label."""
    by = {}
    for r in rows:
        label = ModelSpec(r["model"], r["w"]).label
        if r["ibs"] is not None:
            by.setdefault(label, []).append(r["ibs"])
    out = []
    for label, vals in by.items():
        s = summarize(vals)
        half = 1.96 * s.sd / math.sqrt(s.n)
        out.append(CvSummary(label, s.mean, s.sd, s.mean - half, s.mean + half, s.n))
    return out


def run_real(path=None, schema: CsvSchema | None = None, k: int = 5, models=("gbest_bsb", "cox", "rsf"),
             weights=(0.0, 0.1, 0.2), seed: int = 0, B: int = 100, prior: str = "uniform",
             tree_params: TreeParams = TreeParams(), out=None, jobs: int = 1,
             timing: bool = False) -> tuple[list[dict], list[CvSummary]]:
    """k-fold cross-validated IBS per model on a CSV (default: bundled bladder data)."""
    from ..datasets import BLADDER_SCHEMA, bladder_path

    if path is None:
        path, schema = bladder_path(), BLADDER_SCHEMA
    d = load_csv(path, schema or CsvSchema())
    folds = kfold_indices(d.n, k, SeededRngStream(seed).substream(4))
    setting = f"real_k{k}"
    jobs_list = [
        _Fold(i, tr, te, spec, seed, B, prior, tree_params, d, setting, timing)
        for i, (tr, te) in enumerate(folds)
        for spec in expand_models(models, weights)
    ]
    rows = _execute(_run_fold, jobs_list, jobs)
    rows.sort(key=lambda r: r["rep"])  # fold-major, model order within fold
    if out is not None:
        write_rows(rows, out)
    return rows, summarize_cv(rows)


def read_results(path) -> list[dict]:
    """Parse a results CSV back into typed rows."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != RESULT_COLUMNS:
            raise ValueError(f"{path}: header does not match the results schema")
        for r in reader:
            rows.append({
                "setting_id": r["setting_id"],
                "N": int(r["N"]),
                "cens_target": float(r["cens_target"]) if r["cens_target"] else None,
                "cens_realized": float(r["cens_realized"]) if r["cens_realized"] else None,
                "model": r["model"],
                "w": float(r["w"]) if r["w"] else None,
                "prior": r["prior"],
                "cov_family": r["cov_family"],
                "rep": int(r["rep"]),
                "ibs": float(r["ibs"]) if r["ibs"] else None,
                "runtime_ms": float(r["runtime_ms"]) if r["runtime_ms"] else None,
                "error": r["error"],
            })
    return rows
