"""Weighted survival trees grown by log-rank splitting, without pruning."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import StepFunction, as_generator
from .estimators import kaplan_meier, nelson_aalen, survival_arrays

_TIE_RTOL = 1e-10


@dataclass(frozen=True)
class TreeParams:
    min_node_weight: float = 6.0
    min_events_per_child: int = 1
    max_depth: int = 20
    mtry: int | None = None

    def __post_init__(self):
        if not self.min_node_weight > 0:
            raise ValueError("min_node_weight must be positive")
        if self.min_events_per_child < 1 or self.max_depth < 1:
            raise ValueError("min_events_per_child and max_depth must be positive")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be positive")


def _normalised(w):
    # effective counts: mean weight 1 over positively weighted rows
    n = np.count_nonzero(w)
    return w * (n / w.sum()) if n else w


def _logrank_terms(YL, DL, Y, D):
    """Log-rank chi-square for each row of (YL, DL) against totals (Y, D)."""
    with np.errstate(invalid="ignore", divide="ignore"):
        frac = np.where(Y > 0, YL / Y, 0.0)
        tie = np.where(Y > 1, np.clip(Y - D, 0.0, None) / (Y - 1.0), 0.0)
    U = (DL - frac * D).sum(axis=-1)
    V = (frac * (1.0 - frac) * tie * D).sum(axis=-1)
    return np.where(V > 1e-300, U * U / np.where(V > 1e-300, V, 1.0), 0.0)


def logrank_statistic(left, right) -> float:
    """Weighted two-sample log-rank chi-square statistic.

    ``left`` and ``right`` are Datasets, record lists or ``(time, event,
    weight)`` tuples.  Weights are rescaled to mean one over the pooled rows,
    so a common positive factor does not change the result.
    """
    lt, le, lw = survival_arrays(*left) if isinstance(left, tuple) else survival_arrays(left)
    rt, re_, rw = survival_arrays(*right) if isinstance(right, tuple) else survival_arrays(right)
    if lt.size == 0 or rt.size == 0:
        raise ValueError("both groups must be nonempty")
    t = np.concatenate([lt, rt])
    e = np.concatenate([le, re_]).astype(bool)
    w = _normalised(np.concatenate([lw, rw]).astype(float))
    if not np.any(e & (w > 0)):
        raise ValueError("log-rank statistic needs at least one event")
    is_left = np.arange(t.size) < lt.size
    times = np.unique(t[e & (w > 0)])
    at_risk = w[:, None] * (t[:, None] >= times[None, :])
    dead = (w * e)[:, None] * (t[:, None] == times[None, :])
    Y, D = at_risk.sum(0), dead.sum(0)
    return float(_logrank_terms(at_risk[is_left].sum(0), dead[is_left].sum(0), Y, D))


@dataclass
class _Split:
    stat: float
    feature: int
    threshold: float
    left_mask: np.ndarray


def _best_split(X, t, e, w, params: TreeParams, features) -> _Split | None:
    """Exhaustive midpoint search over ``features`` (ascending order)."""
    wn = _normalised(w)
    ev = e & (w > 0)
    times = np.unique(t[ev])
    at_risk = wn[:, None] * (t[:, None] >= times[None, :])
    dead = (wn * ev)[:, None] * (t[:, None] == times[None, :])
    Y, D = at_risk.sum(0), dead.sum(0)
    total_w = w.sum()
    total_ev = int(ev.sum())
    best = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cut = np.nonzero(xs[1:] > xs[:-1])[0]  # left = order[:s+1]
        if cut.size == 0:
            continue
        wl = np.cumsum(w[order])[cut]
        el = np.cumsum(ev[order])[cut]
        ok = (
            (wl >= params.min_node_weight)
            & (total_w - wl >= params.min_node_weight)
            & (el >= params.min_events_per_child)
            & (total_ev - el >= params.min_events_per_child)
        )
        if not ok.any():
            continue
        cut = cut[ok]
        YL = np.cumsum(at_risk[order], axis=0)[cut]
        DL = np.cumsum(dead[order], axis=0)[cut]
        stats = _logrank_terms(YL, DL, Y, D)
        top = stats.max()
        j = int(np.argmax(stats >= top - _TIE_RTOL * max(1.0, top)))
        if best is None or stats[j] > best.stat + _TIE_RTOL * max(1.0, best.stat):
            s = cut[j]
            thr = 0.5 * (xs[s] + xs[s + 1])
            if not thr < xs[s + 1]:  # midpoint rounded up onto the right value
                thr = xs[s]
            best = _Split(float(stats[j]), int(f), float(thr), X[:, f] <= thr)
    return best


class SurvivalTree:
    """Fitted tree; node arrays plus the training rows held at each leaf."""

    def __init__(self, feature, threshold, left, right, leaf_index, leaves, time, event, weight,
                 params: TreeParams, feature_names=None, n_features=None):
        self.feature = np.asarray(feature, dtype=int)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=int)
        self.right = np.asarray(right, dtype=int)
        self.leaf_index = np.asarray(leaf_index, dtype=int)
        self.leaves = [np.asarray(v, dtype=int) for v in leaves]
        self.time = time
        self.event = event
        self.weight = weight
        self.params = params
        self.feature_names = feature_names
        self._p = n_features if n_features is not None else (
            None if feature_names is None else len(feature_names))
        self._km = {}
        self._na = {}

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def n_internal(self) -> int:
        return int(np.sum(self.feature >= 0))

    @property
    def n_features(self) -> int | None:
        return self._p

    def splits(self) -> list[tuple[int, float]]:
        """(feature, threshold) of internal nodes in creation order."""
        return [(int(f), float(th)) for f, th in zip(self.feature, self.threshold) if f >= 0]

    def apply(self, X) -> np.ndarray:
        """Leaf id for each row of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.n_features is not None and X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} covariates, got {X.shape[1]}")
        node = np.zeros(X.shape[0], dtype=int)
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                break
            rows = np.nonzero(inner)[0]
            go_left = X[rows, f[rows]] <= self.threshold[node[rows]]
            node[rows] = np.where(go_left, self.left[node[rows]], self.right[node[rows]])
        return self.leaf_index[node]

    def members(self, leaf: int):
        """(time, event, weight) of training rows in ``leaf``."""
        if not 0 <= leaf < len(self.leaves):
            raise KeyError(f"unknown leaf {leaf}")
        idx = self.leaves[leaf]
        return self.time[idx], self.event[idx], self.weight[idx]

    def leaf_survival(self, leaf: int) -> StepFunction:
        if leaf not in self._km:
            self._km[leaf] = kaplan_meier(*self.members(leaf))
        return self._km[leaf]

    def leaf_cumulative_hazard(self, leaf: int) -> StepFunction:
        if leaf not in self._na:
            self._na[leaf] = nelson_aalen(*self.members(leaf))
        return self._na[leaf]

    def dump(self, feature_names=None) -> str:
        names = feature_names or self.feature_names
        lines = []

        def walk(node, depth):
            pad = "  " * depth
            f = self.feature[node]
            if f < 0:
                leaf = self.leaf_index[node]
                idx = self.leaves[leaf]
                lines.append(f"{pad}leaf {leaf}: n={idx.size} weight={self.weight[idx].sum():.3f}")
                return
            name = names[f] if names is not None else f"x{f}"
            lines.append(f"{pad}{name} <= {self.threshold[node]:.6g}")
            walk(self.left[node], depth + 1)
            lines.append(f"{pad}{name} > {self.threshold[node]:.6g}")
            walk(self.right[node], depth + 1)

        walk(0, 0)
        return "\n".join(lines)


def find_leaf(tree: SurvivalTree, x) -> int:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a single covariate vector")
    return int(tree.apply(x[None, :])[0])


def leaf_members(tree: SurvivalTree, leaf: int):
    return tree.members(leaf)


def fit_survival_tree(X, time, event, weight=None, params: TreeParams = TreeParams(), rng=None,
                      feature_names=None) -> SurvivalTree:
    """Grow a tree greedily on weighted rows.

    ``weight`` is in effective-observation units (``min_node_weight`` is
    compared against it).  Zero-weight rows never influence a split but are
    routed to leaves afterwards so that leaves partition all rows.
    """
    X = np.asarray(X, dtype=float)
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=bool)
    weight = np.ones(time.size) if weight is None else np.asarray(weight, dtype=float)
    m, p = X.shape
    if not np.any(event & (weight > 0)):
        raise ValueError("cannot grow a survival tree without events")
    if params.mtry is not None and params.mtry > p:
        raise ValueError("mtry exceeds the number of features")
    gen = as_generator(rng) if params.mtry is not None and params.mtry < p else None

    feature, threshold, left, right, leaf_index, leaves = [], [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(np.nan)
        left.append(-1)
        right.append(-1)
        leaf_index.append(-1)
        return len(feature) - 1

    active = np.nonzero(weight > 0)[0]
    root = new_node()
    stack = [(root, active, 0)]
    while stack:
        node, idx, depth = stack.pop()
        split = None
        t, e = time[idx], event[idx]
        can_split = (
            depth < params.max_depth
            and np.any(e)
            and t.max() > t.min()
            and weight[idx].sum() >= 2 * params.min_node_weight
        )
        if can_split:
            if gen is not None:
                feats = np.sort(gen.choice(p, size=params.mtry, replace=False))
            else:
                feats = range(p)
            split = _best_split(X[idx], t, e, weight[idx], params, feats)
        if split is None:
            leaf_index[node] = len(leaves)
            leaves.append(idx)
            continue
        feature[node] = split.feature
        threshold[node] = split.threshold
        lnode, rnode = new_node(), new_node()
        left[node], right[node] = lnode, rnode
        # push right first so the left subtree is numbered first
        stack.append((rnode, idx[~split.left_mask], depth + 1))
        stack.append((lnode, idx[split.left_mask], depth + 1))

    tree = SurvivalTree(feature, threshold, left, right, leaf_index, leaves, time, event, weight, params,
                        feature_names, p)
    idle = np.nonzero(weight <= 0)[0]
    if idle.size:
        target = tree.apply(X[idle])
        for lf in np.unique(target):
            tree.leaves[lf] = np.sort(np.concatenate([tree.leaves[lf], idle[target == lf]]))
    return tree
