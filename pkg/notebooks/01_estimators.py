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
# # Nonparametric and regression estimators
#
# Kaplan-Meier, Nelson-Aalen, the censoring curve used for IPCW weights,
# then a Cox fit and a Weibull AFT fit on the bundled bladder data.

# %%
import numpy as np

from gbest.datasets import load_bladder
from gbest.estimators import (
    censoring_km,
    cox_fit,
    cox_survival,
    kaplan_meier,
    nelson_aalen,
    weibull_aft_fit,
    weibull_survival,
)

d = load_bladder()
print(d.n, "subjects,", int(d.event.sum()), "recurrences, covariates", d.feature_names)

# %%
km = kaplan_meier(d)
na = nelson_aalen(d)
G = censoring_km(d)
for t in (5, 10, 20, 30, 50):
    print(f"t={t:>3}  S_KM={km(t):.3f}  exp(-H_NA)={np.exp(-na(t)):.3f}  G={G(t):.3f}")

# %% [markdown]
# The two survival estimates agree closely until the risk set gets thin.
# A tied event and censoring time counts the event first, so the censoring
# curve only drops for subjects still at risk after the deaths.

# %%
cox = cox_fit(d)
for name, b in zip(cox.feature_names, cox.coefficients):
    print(f"{name:>8}: {b:+.4f}  (hazard ratio {np.exp(b):.3f})")
print("log partial likelihood", round(cox.loglik, 4), "after", cox.n_iter, "Newton steps")

# %%
typical = np.median(d.X, axis=0)
S = cox_survival(cox, typical)
print("Cox survival at the covariate median:", [round(S(t), 3) for t in (10, 20, 30)])

# %%
aft = weibull_aft_fit(d)
print("Weibull AFT intercept", round(aft.intercept, 3), "scale", round(aft.scale, 3))
Sw = weibull_survival(aft, typical)
print("Weibull survival at the covariate median:", [round(float(Sw(t)), 3) for t in (10, 20, 30)])
