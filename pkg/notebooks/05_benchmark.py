# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # A small benchmark grid
#
# Two sample sizes, two censoring levels, a handful of replications and
# small ensembles, so the whole script runs in well under a minute. The
# command-line runner does the same at full size.

# %%
import tempfile
from pathlib import Path

from gbest.bench.config import GridSpec
from gbest.bench.plot import interval_table, render_ci_plot, select
from gbest.bench.regression import analyze_regression
from gbest.bench.runner import run_grid, run_real, write_rows

spec = GridSpec(sample_sizes=(50, 100), censoring_levels=(0.1, 0.7), prior_weights=(0.1,),
                models=("gbest_bsb", "cox", "rsf"), replications=4, B=10)
rows = run_grid(spec, seed=1)
print(len(rows), "rows;", sum(r["ibs"] is None for r in rows), "failed")

# %%
for setting, cells in interval_table(rows).items():
    print(setting)
    for label, (mean, lo, hi) in cells.items():
        print(f"   {label:>16}: {mean:.4f}  [{lo:.4f}, {hi:.4f}]")

# %% [markdown]
# Regression of logit(IBS) on the grid factors. With four replications per
# cell the intervals are wide; the full grid narrows them.

# %%
print(analyze_regression(rows, bootstrap_reps=200, rng=0).to_text())

# %%
with tempfile.TemporaryDirectory() as tmp:
    write_rows(rows, Path(tmp) / "grid.csv")
    svg = render_ci_plot(select(rows, cens_target=0.7))
    (Path(tmp) / "grid.svg").write_text(svg)
    print("svg bytes:", len(svg))

# %% [markdown]
# Five-fold cross-validation on the bladder data, reported as mean and a
# normal interval over folds.

# %%
_, summary = run_real(seed=1, B=10, weights=(0.1,))
for s in summary:
    print(f"{s.label:>16}: {s.mean:.3f} (sd {s.sd:.3f})")
