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
# # Simulated data and the integrated Brier score
#
# Weibull AFT event times, administrative censoring calibrated to a target
# fraction, and IPCW Brier scores for a few reference predictors.

# %%
import numpy as np

from gbest.core import SeededRngStream, StepFunction
from gbest.estimators import kaplan_meier
from gbest.metrics import brier_score, integrated_brier
from gbest.sim import SimConfig, calibrate_censoring, simulate_dataset

for target in (0.1, 0.4, 0.7):
    cfg = SimConfig(n=100, target_censoring=target)
    c = calibrate_censoring(cfg, target, SeededRngStream(1))
    fracs = [simulate_dataset(cfg, SeededRngStream(r), threshold=c).censoring_fraction() for r in range(50)]
    print(f"target {target:.0%}: threshold {c:7.3f}, realised {np.mean(fracs):.3f}")

# %% [markdown]
# A constant curve of 1/2 scores exactly 1/4 at every time when nobody is
# censored. The Kaplan-Meier curve of the test fold itself does better.

# %%
d = simulate_dataset(SimConfig(n=200, target_censoring=0.0), SeededRngStream(7))
half = StepFunction([], [], 0.5)
print("Brier of 1/2 at the median time:", brier_score(lambda _: half, d, float(np.median(d.time))))
km = kaplan_meier(d)
res = integrated_brier(lambda _: km, d)
print(f"IBS of the pooled KM curve: {res.ibs:.4f} over [0, {res.horizon:.2f}]")
