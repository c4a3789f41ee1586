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
# # Bootstrap weights and the beta-Stacy posterior
#
# Efron counts, Rubin weights and symmetric Dirichlet weights, then the
# conjugate update of a beta-Stacy process by censored times and draws
# of random discrete distributions from its posterior.

# %%
import numpy as np

from gbest.bootstrap import (
    PriorSpec,
    beta_stacy_draw,
    beta_stacy_posterior,
    dirichlet_weights,
    efron_weights,
    precision_from_weight,
    rubin_weights,
    uniform_time_prior,
)
from gbest.core import SeededRngStream
from gbest.estimators import kaplan_meier

stream = SeededRngStream(2024)
print("Efron counts :", efron_weights(8, stream.substream(0)))
print("Rubin weights:", np.round(rubin_weights(8, stream.substream(1)), 3))
print("Dirichlet(5) :", np.round(dirichlet_weights(5.0, 8, stream.substream(2)), 3))

# %% [markdown]
# Rubin weights have variance (n-1)/(n^2 (n+1)) per coordinate.

# %%
gen = stream.substream(3).generator()
W = np.array([rubin_weights(8, gen) for _ in range(20_000)])
print("empirical", W.var(axis=0).mean().round(5), "theory", round(7 / (64 * 9), 5))

# %% [markdown]
# A prior weight w translates into a precision k with k/(k+n) = w.

# %%
rng = np.random.default_rng(5)
times = np.round(rng.exponential(4, 30), 2)
events = rng.random(30) < 0.6
k = precision_from_weight(0.2, times.size)
prior = PriorSpec(uniform_time_prior(times.max()), (), k)
post = beta_stacy_posterior(times, events, prior)
km = kaplan_meier(times, events)
for t in (1, 3, 6, 10):
    i = np.searchsorted(post.grid, t, side="right") - 1
    print(f"t={t:>2}  posterior mean {post.centering_survival[i]:.3f}  KM {km(t):.3f}")

# %% [markdown]
# With k = 0 the posterior mean is the Kaplan-Meier curve exactly.

# %%
flat = beta_stacy_posterior(times, events, PriorSpec(prior.time_prior, (), 0.0))
print("max |S* - KM| =", np.abs(flat.centering_survival - km(flat.grid)).max())

# %%
g = beta_stacy_draw(post, 30, stream.substream(4))
print(g.atoms.size, "atoms, total mass", g.masses.sum())
