"""Second-order gradient boosting on logistic loss."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._tree import Tree, _TreeBuilder, best_boosted_split
from .forest import TrainingError, _check_xy
from .params import BoostedParams


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _soft_threshold(g: float, alpha: float) -> float:
    if g > alpha:
        return g - alpha
    if g < -alpha:
        return g + alpha
    return 0.0


def _leaf_weight(G: float, H: float, params: BoostedParams) -> float:
    return -_soft_threshold(G, params.reg_alpha) / (H + params.reg_lambda)


def _grow_boosted_tree(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    cols: np.ndarray,
    params: BoostedParams,
) -> Tree:
    builder = _TreeBuilder()

    def new_node(idx: np.ndarray) -> int:
        G = float(g[idx].sum())
        H = float(h[idx].sum())
        return builder.add(_leaf_weight(G, H, params), idx.size)

    root = new_node(rows)
    stack: list[tuple[int, np.ndarray, int]] = [(root, rows, 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= params.max_depth or idx.size < 2:
            continue
        found = best_boosted_split(
            X[np.ix_(idx, cols)],
            g[idx],
            h[idx],
            params.reg_lambda,
            params.gamma,
            params.min_child_weight,
        )
        if found is None:
            continue
        j, thr, _gain = found
        f_global = int(cols[j])
        go_left = X[idx, f_global] <= thr
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        builder.make_split(node, f_global, thr)
        left = new_node(left_idx)
        right = new_node(right_idx)
        builder.left[node] = left
        builder.right[node] = right
        stack.append((right, right_idx, depth + 1))
        stack.append((left, left_idx, depth + 1))
    return builder.finish()


@dataclass
class BoostedModel:
    kind: str
    trees: list[Tree]
    feature_names: list[str]
    params: BoostedParams
    seed: int
    base_score: float

    decision_threshold: float = 0.5

    def margin(self, X: np.ndarray) -> np.ndarray:
        """Pre-sigmoid log-odds output."""
        X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} feature columns")
        out = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            out += self.params.learning_rate * tree.predict(X)
        return out

    def score(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.margin(X))

    def raw_output(self, X: np.ndarray) -> np.ndarray:
        """Output space in which tree attributions are additive (the margin)."""
        return self.margin(X)


def train_boosted(
    X: np.ndarray,
    y: np.ndarray,
    params: BoostedParams | None = None,
    seed: int = 0,
    feature_names: list[str] | None = None,
) -> BoostedModel:
    """Fit a boosted ensemble; deterministic given (X, y, params, seed)."""
    params = params or BoostedParams()
    X, y = _check_xy(X, y)
    names = feature_names or [f"f{i}" for i in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise TrainingError("feature_names must match the number of columns")
    n, p = X.shape
    prevalence = float(y.mean())
    base_score = math.log(prevalence / (1.0 - prevalence))
    margins = np.full(n, base_score)
    yf = y.astype(np.float64)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x62,)))
    n_rows = max(2, int(round(params.subsample * n)))
    n_cols = max(1, int(round(params.colsample_bytree * p)))

    trees: list[Tree] = []
    for _ in range(params.n_estimators):
        prob = _sigmoid(margins)
        g = prob - yf
        h = prob * (1.0 - prob)
        rows = np.sort(rng.permutation(n)[:n_rows]) if n_rows < n else np.arange(n)
        cols = np.sort(rng.choice(p, size=n_cols, replace=False)) if n_cols < p else np.arange(p)
        tree = _grow_boosted_tree(X, g, h, rows, cols, params)
        trees.append(tree)
        if params.learning_rate != 0.0:
            margins += params.learning_rate * tree.predict(X)
    return BoostedModel(
        kind="boosted",
        trees=trees,
        feature_names=list(names),
        params=params,
        seed=seed,
        base_score=base_score,
    )
