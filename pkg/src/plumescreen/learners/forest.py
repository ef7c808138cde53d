"""Random forest classifier over bootstrap-sampled CART trees."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._tree import Tree, _TreeBuilder, best_classification_split
from .params import ForestParams


class TrainingError(ValueError):
    """Input data unfit for training."""


def _check_xy(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise TrainingError("X must be 2-D with one label per row")
    if X.shape[0] < 2:
        raise TrainingError("need at least 2 training rows")
    if not np.isfinite(X).all():
        raise TrainingError("feature matrix contains non-finite values")
    if not np.isin(y, (0, 1)).all():
        raise TrainingError("labels must be 0/1")
    y = y.astype(np.int64)
    if y.min() == y.max():
        raise TrainingError("training labels contain a single class")
    return X, y


def _n_candidate_features(max_features: str | float, p: int) -> int:
    if max_features == "sqrt":
        return max(1, int(math.sqrt(p)))
    if max_features == "log2":
        return max(1, int(math.log2(p)))
    return max(1, int(float(max_features) * p))


def _grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    params: ForestParams,
    bootstrap: bool,
) -> Tree:
    n, p = X.shape
    m = max(1, int(round(params.max_samples * n)))
    if bootstrap:
        rows = rng.integers(0, n, size=m)
    elif m < n:
        rows = rng.permutation(n)[:m]
    else:
        rows = np.arange(n)
    k = _n_candidate_features(params.max_features, p)
    max_depth = params.max_depth if params.max_depth is not None else np.inf

    builder = _TreeBuilder()
    # (node_id, row indices, depth); children resolved in creation order.
    stack: list[tuple[int, np.ndarray, int]] = []

    def new_node(idx: np.ndarray) -> int:
        pos = int(y[idx].sum())
        return builder.add(pos / idx.size, idx.size)

    root_idx = rows
    root = new_node(root_idx)
    stack.append((root, root_idx, 0))
    while stack:
        node, idx, depth = stack.pop()
        n_node = idx.size
        pos = y[idx].sum()
        if (
            depth >= max_depth
            or n_node < params.min_samples_split
            or pos == 0
            or pos == n_node
        ):
            continue
        if k < p:
            feats = np.sort(rng.choice(p, size=k, replace=False))
        else:
            feats = np.arange(p)
        found = best_classification_split(
            X[np.ix_(idx, feats)], y[idx], params.min_samples_leaf, params.criterion
        )
        if found is None:
            continue
        j, thr, _gain = found
        f_global = int(feats[j])
        go_left = X[idx, f_global] <= thr
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        builder.make_split(node, f_global, thr)
        left = new_node(left_idx)
        right = new_node(right_idx)
        builder.left[node] = left
        builder.right[node] = right
        # Push right first so the left subtree is grown (and numbered) first.
        stack.append((right, right_idx, depth + 1))
        stack.append((left, left_idx, depth + 1))
    return builder.finish()


@dataclass
class ForestModel:
    kind: str
    trees: list[Tree]
    feature_names: list[str]
    params: ForestParams
    seed: int

    #: Probability-like scores; classify at 0.5.
    decision_threshold: float = 0.5

    def score(self, X: np.ndarray) -> np.ndarray:
        """Mean leaf positive-class fraction over the trees."""
        X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} feature columns")
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)

    def raw_output(self, X: np.ndarray) -> np.ndarray:
        """Output space in which tree attributions are additive (same as score)."""
        return self.score(X)


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    params: ForestParams | None = None,
    seed: int = 0,
    feature_names: list[str] | None = None,
    bootstrap: bool = True,
    threads: int = 1,
) -> ForestModel:
    """Fit a random forest; deterministic given (X, y, params, seed).

    ``bootstrap=False`` is a test hook that trains each tree on an
    unresampled subset so a single tree equals the forest.
    """
    params = params or ForestParams()
    X, y = _check_xy(X, y)
    names = feature_names or [f"f{i}" for i in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise TrainingError("feature_names must match the number of columns")

    def build(t: int) -> Tree:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
        return _grow_tree(X, y, rng, params, bootstrap)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(build, range(params.n_estimators)))
    else:
        trees = [build(t) for t in range(params.n_estimators)]
    return ForestModel(
        kind="forest", trees=trees, feature_names=list(names), params=params, seed=seed
    )
