"""Benchmark settings and the ``key = value`` config file reader."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

from ..sim import canonical_family
from ..tree import TreeParams
from .models import MODEL_NAMES

RESULT_COLUMNS = (
    "setting_id", "N", "cens_target", "cens_realized", "model", "w", "prior",
    "cov_family", "rep", "ibs", "runtime_ms", "error",
)


@dataclass(frozen=True)
class GridSpec:
    sample_sizes: tuple = (50, 75, 100, 200)
    censoring_levels: tuple = (0.1, 0.4, 0.7)
    prior_weights: tuple = (0.0, 0.1, 0.2)
    models: tuple = ("gbest_bsb", "gbest_old", "cox", "rsf")
    replications: int = 50
    priors: tuple = ("uniform",)
    covariate_families: tuple = ("uniform(0,10)",)
    B: int = 100
    tree_params: TreeParams = field(default_factory=TreeParams)
    p: int = 5

    def __post_init__(self):
        for name in ("sample_sizes", "censoring_levels", "prior_weights", "models", "priors",
                     "covariate_families"):
            value = tuple(getattr(self, name))
            if not value:
                raise ValueError(f"{name} must be nonempty")
            object.__setattr__(self, name, value)
        if self.replications < 2:
            raise ValueError("replications must be >= 2")
        for m in self.models:
            if m not in MODEL_NAMES:
                raise ValueError(f"unknown model {m!r}")
        for pr in self.priors:
            if pr not in ("uniform", "normal"):
                raise ValueError(f"unknown prior {pr!r}")
        object.__setattr__(self, "covariate_families",
                           tuple(canonical_family(f) for f in self.covariate_families))


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.replace(";", ",").split(",") if v.strip()]


_GRID_PARSERS = {
    "sample_sizes": lambda v: tuple(int(x) for x in _split(v)),
    "censoring_levels": lambda v: tuple(float(x) for x in _split(v)),
    "prior_weights": lambda v: tuple(float(x) for x in _split(v)),
    "models": lambda v: tuple(_split(v)),
    "replications": int,
    "priors": lambda v: tuple(_split(v)),
    "covariate_families": lambda v: tuple(_split(v)),
    "B": int,
    "p": int,
}

_TREE_PARSERS = {
    "min_node_weight": float,
    "min_events_per_child": int,
    "max_depth": int,
    "mtry": lambda v: None if v.lower() in ("", "none") else int(v),
}


def read_config(path, base: GridSpec | None = None) -> GridSpec:
    """Read ``[grid]`` and ``[tree]`` sections; unknown keys are errors."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    spec = base or GridSpec()
    grid_kw, tree_kw = {}, {}
    for section in cp.sections():
        parsers, target = {"grid": (_GRID_PARSERS, grid_kw), "tree": (_TREE_PARSERS, tree_kw)}.get(
            section, (None, None))
        if parsers is None:
            raise ValueError(f"{path}: unknown section [{section}]")
        for key, value in cp.items(section):
            if key not in parsers:
                raise ValueError(f"{path}: unknown key {key!r} in [{section}]")
            target[key] = parsers[key](value)
    if tree_kw:
        grid_kw["tree_params"] = replace(spec.tree_params, **tree_kw)
    return replace(spec, **grid_kw)
