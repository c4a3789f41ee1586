"""Model registry used by the benchmark runners."""
from __future__ import annotations

import logging
from dataclasses import dataclass

from ..core import Dataset, SeededRngStream
from ..ensemble import GbestConfig, gbest_fit, rsf_fit
from ..estimators import ConvergenceError, cox_fit, cox_survival
from ..tree import TreeParams

log = logging.getLogger(__name__)

MODEL_NAMES = ("gbest_bsb", "gbest_old", "cox", "rsf", "bagging")
WEIGHTED = ("gbest_bsb", "gbest_old")


@dataclass(frozen=True)
class ModelSpec:
    name: str
    w: float | None = None

    @property
    def label(self) -> str:
        return self.name if self.w is None else f"{self.name} w={self.w:g}"


def expand_models(names, weights) -> list[ModelSpec]:
    out = []
    for name in names:
        if name not in MODEL_NAMES:
            raise ValueError(f"unknown model {name!r}; choose from {MODEL_NAMES}")
        if name in WEIGHTED:
            out.extend(ModelSpec(name, float(w)) for w in weights)
        else:
            out.append(ModelSpec(name))
    return out


def fit_predict(spec: ModelSpec, train: Dataset, test: Dataset, rng: SeededRngStream, *,
                B: int, prior: str, tree_params: TreeParams):
    """Fit on ``train``; return (curves for ``test`` rows, warning text)."""
    warning = ""
    if spec.name == "cox":
        try:
            model = cox_fit(train)
        except ConvergenceError as err:
            if err.model is None:
                raise
            # keep the last Newton iterate, as R's coxph does with a warning
            model = err.model
            warning = f"warning: {err}"
        return [cox_survival(model, x) for x in test.X], warning
    if spec.name == "rsf":
        model = rsf_fit(train, B, tree_params, rng)
        return model.predict_survival(test.X), warning
    variant = {"gbest_bsb": "beta_stacy_labels", "gbest_old": "weibull_labels", "bagging": "efron_bagging"}[spec.name]
    cfg = GbestConfig(B=B, prior_weight_w=spec.w or 0.0, prior=prior, tree_params=tree_params, variant=variant)
    model = gbest_fit(train, cfg, rng)
    if model.notes:
        warning = "warning: " + "; ".join(model.notes)
    return model.predict_survival(test.X), warning
