"""Exact Shapley attributions for tree ensembles plus summary aggregations.

Two independent routes compute the same quantity:

* :func:`tree_shap` — the polynomial-time path-weight recursion over each
  tree, marginalizing absent features with node cover fractions.
* :func:`brute_force_shap` — explicit enumeration of all subsets of the
  features a tree uses, for verification (exponential, keep trees small).

Forest attributions live in the mean leaf-fraction output; boosted
attributions live in margin (log-odds) space where additivity is exact.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .learners._tree import Tree


class UnsupportedModelError(ValueError):
    """Attribution requested for a model family without tree structure."""


@dataclass(frozen=True)
class Attribution:
    """Per-feature Shapley values for one sample."""

    phi: np.ndarray
    base_value: float
    feature_values: np.ndarray

    def total(self) -> float:
        """base + sum(phi), which must equal the raw model output."""
        return float(self.base_value + self.phi.sum())


# ---------------------------------------------------------------------------
# Path-recursion TreeSHAP


def _unwind(d: list, z: list, o: list, w: list, idx: int) -> None:
    """Remove path element idx, restoring the weights of the shorter path."""
    k = len(w) - 1
    ze = z[idx]
    oe = o[idx]
    if oe != 0.0:
        n = w[k]
        for i in range(k - 1, -1, -1):
            t = w[i]
            wi = n * (k + 1) / ((i + 1) * oe)
            w[i] = wi
            n = t - wi * ze * (k - i) / (k + 1)
    else:
        for i in range(k):
            w[i] = w[i] * (k + 1) / (ze * (k - i))
    w.pop()
    del d[idx], z[idx], o[idx]


def _unwound_sum(z: list, o: list, w: list, idx: int) -> float:
    """Sum of the path weights with element idx removed (no mutation)."""
    k = len(w) - 1
    ze = z[idx]
    oe = o[idx]
    total = 0.0
    if oe != 0.0:
        n = w[k]
        for i in range(k - 1, -1, -1):
            t = n * (k + 1) / ((i + 1) * oe)
            total += t
            n = w[i] - t * ze * (k - i) / (k + 1)
    else:
        for i in range(k):
            total += w[i] * (k + 1) / (ze * (k - i))
    return total


def tree_phi(tree: Tree, x: np.ndarray, n_features: int) -> np.ndarray:
    """Shapley values of one tree's cover-weighted expectation game at x."""
    phi = np.zeros(n_features)
    feature = tree.feature
    threshold = tree.threshold
    left = tree.left
    right = tree.right
    value = tree.value
    cover = tree.n_samples.astype(np.float64)
    if (cover <= 0).any():
        raise ValueError("every node needs a positive training-sample count")

    def recurse(node, d, z, o, w, pz, po, pf):
        d = d.copy()
        z = z.copy()
        o = o.copy()
        w = w.copy()
        length = len(w)
        d.append(pf)
        z.append(pz)
        o.append(po)
        w.append(1.0 if length == 0 else 0.0)
        for i in range(length - 1, -1, -1):
            w[i + 1] += po * w[i] * (i + 1) / (length + 1)
            w[i] = pz * w[i] * (length - i) / (length + 1)

        f = int(feature[node])
        if f < 0:
            v = value[node]
            for e in range(1, len(w)):
                s = _unwound_sum(z, o, w, e)
                phi[d[e]] += s * (o[e] - z[e]) * v
            return
        if x[f] <= threshold[node]:
            hot, cold = int(left[node]), int(right[node])
        else:
            hot, cold = int(right[node]), int(left[node])
        iz = io = 1.0
        dup = -1
        for j in range(1, len(d)):
            if d[j] == f:
                dup = j
                break
        if dup >= 0:
            iz, io = z[dup], o[dup]
            _unwind(d, z, o, w, dup)
        c = cover[node]
        recurse(hot, d, z, o, w, iz * cover[hot] / c, io, f)
        recurse(cold, d, z, o, w, iz * cover[cold] / c, 0.0, f)

    recurse(0, [], [], [], [], 1.0, 1.0, -1)
    return phi


def expected_value(tree: Tree) -> float:
    """Cover-weighted mean leaf value (the tree's output on an average path)."""
    cover = tree.n_samples.astype(np.float64)
    total = 0.0
    stack = [(0, 1.0)]
    while stack:
        node, wgt = stack.pop()
        if tree.feature[node] < 0:
            total += wgt * tree.value[node]
            continue
        c = cover[node]
        lt, rt = int(tree.left[node]), int(tree.right[node])
        stack.append((lt, wgt * cover[lt] / c))
        stack.append((rt, wgt * cover[rt] / c))
    return total


def _combine(model, per_tree_phi: Sequence[np.ndarray], per_tree_base: Sequence[float]):
    if model.kind == "forest":
        phi = np.mean(per_tree_phi, axis=0)
        base = float(np.mean(per_tree_base))
    else:  # boosted, margin space
        lr = model.params.learning_rate
        phi = lr * np.sum(per_tree_phi, axis=0)
        base = model.base_score + lr * float(np.sum(per_tree_base))
    return phi, base


def _require_trees(model) -> None:
    if getattr(model, "kind", None) not in ("forest", "boosted"):
        raise UnsupportedModelError(
            "attributions need per-tree structure; the kernel SVM is not supported"
        )


def tree_shap(model, x: np.ndarray) -> Attribution:
    """Exact per-feature Shapley attribution of one sample under a tree model."""
    _require_trees(model)
    x = np.asarray(x, dtype=np.float64)
    p = len(model.feature_names)
    phis = [tree_phi(t, x, p) for t in model.trees]
    bases = [expected_value(t) for t in model.trees]
    phi, base = _combine(model, phis, bases)
    return Attribution(phi=phi, base_value=base, feature_values=x.copy())


def explain_matrix(model, X: np.ndarray) -> list[Attribution]:
    """tree_shap over the rows of X, reusing per-tree expected values."""
    _require_trees(model)
    X = np.asarray(X, dtype=np.float64)
    p = len(model.feature_names)
    bases = [expected_value(t) for t in model.trees]
    out = []
    for row in X:
        phis = [tree_phi(t, row, p) for t in model.trees]
        phi, base = _combine(model, phis, bases)
        out.append(Attribution(phi=phi, base_value=base, feature_values=row.copy()))
    return out


# ---------------------------------------------------------------------------
# Brute-force oracle


def _used_features(tree: Tree) -> np.ndarray:
    return np.unique(tree.feature[tree.feature >= 0])


def tree_subset_values(tree: Tree, x: np.ndarray, feats: np.ndarray) -> np.ndarray:
    """Game value v(S) for every subset S of `feats` (bitmask-indexed).

    Missing features are marginalized recursively with cover fractions;
    present features follow x down the tree.
    """
    m = feats.size
    n_subsets = 1 << m
    bit_of = {int(f): 1 << j for j, f in enumerate(feats)}
    subset_ids = np.arange(n_subsets)
    cover = tree.n_samples.astype(np.float64)
    v = np.zeros(n_subsets)
    stack: list[tuple[int, np.ndarray]] = [(0, np.ones(n_subsets))]
    while stack:
        node, w = stack.pop()
        f = int(tree.feature[node])
        if f < 0:
            v += tree.value[node] * w
            continue
        lt, rt = int(tree.left[node]), int(tree.right[node])
        goes_left = x[f] <= tree.threshold[node]
        has = (subset_ids & bit_of[f]) != 0
        c = cover[node]
        wl = w * np.where(has, 1.0 if goes_left else 0.0, cover[lt] / c)
        wr = w * np.where(has, 0.0 if goes_left else 1.0, cover[rt] / c)
        stack.append((lt, wl))
        stack.append((rt, wr))
    return v


def brute_force_tree_phi(tree: Tree, x: np.ndarray, n_features: int) -> np.ndarray:
    """Shapley values by explicit subset enumeration over the used features."""
    phi = np.zeros(n_features)
    feats = _used_features(tree)
    m = feats.size
    if m == 0:
        return phi
    v = tree_subset_values(tree, x, feats)
    subset_ids = np.arange(1 << m)
    sizes = np.zeros(1 << m, dtype=np.int64)
    for j in range(m):
        sizes += (subset_ids >> j) & 1
    fact = [math.factorial(i) for i in range(m + 1)]
    weight_by_size = np.asarray(
        [fact[s] * fact[m - 1 - s] / fact[m] for s in range(m)], dtype=np.float64
    )
    for j, f in enumerate(feats):
        bit = 1 << j
        without = subset_ids[(subset_ids & bit) == 0]
        gains = v[without | bit] - v[without]
        phi[int(f)] = float(np.sum(weight_by_size[sizes[without]] * gains))
    return phi


def brute_force_shap(model, x: np.ndarray) -> Attribution:
    """Oracle twin of :func:`tree_shap`; exponential in per-tree used features."""
    _require_trees(model)
    x = np.asarray(x, dtype=np.float64)
    p = len(model.feature_names)
    phis = [brute_force_tree_phi(t, x, p) for t in model.trees]
    bases = [expected_value(t) for t in model.trees]
    phi, base = _combine(model, phis, bases)
    return Attribution(phi=phi, base_value=base, feature_values=x.copy())


# ---------------------------------------------------------------------------
# Aggregation (summary plots / importance tables)


@dataclass(frozen=True)
class SummaryStats:
    feature_names: tuple
    mean_abs: np.ndarray
    mean_pos: np.ndarray
    mean_neg: np.ndarray
    order: np.ndarray  # feature indices ranked by descending mean_abs

    def top(self, k: int = 10) -> list[str]:
        return [self.feature_names[i] for i in self.order[:k]]

    def rank_of(self, name: str) -> int:
        idx = self.feature_names.index(name)
        return int(np.nonzero(self.order == idx)[0][0]) + 1


def summarize(attributions: Sequence[Attribution], feature_names: Sequence[str]) -> SummaryStats:
    """Per-feature mean |SHAP| (the importance), mean positive and mean negative.

    Ranking is by descending mean |SHAP| with ties broken by canonical
    feature order.
    """
    if not attributions:
        raise ValueError("summarize needs at least one attribution")
    phi = np.vstack([a.phi for a in attributions])
    if phi.shape[1] != len(feature_names):
        raise ValueError("feature count mismatch")
    mean_abs = np.abs(phi).mean(axis=0)
    mean_pos = np.clip(phi, 0.0, None).mean(axis=0)
    mean_neg = np.clip(phi, None, 0.0).mean(axis=0)
    order = np.argsort(-mean_abs, kind="stable")
    return SummaryStats(
        feature_names=tuple(feature_names),
        mean_abs=mean_abs,
        mean_pos=mean_pos,
        mean_neg=mean_neg,
        order=order,
    )


# ---------------------------------------------------------------------------
# Exports


def write_attribution_csv(
    path, ids: Sequence[str], attributions: Sequence[Attribution], feature_names: Sequence[str]
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "base_value", *feature_names])
        for pid, att in zip(ids, attributions):
            writer.writerow([pid, repr(float(att.base_value)), *[repr(float(v)) for v in att.phi]])


def read_attribution_csv(path) -> tuple[list[str], list[str], np.ndarray, np.ndarray]:
    """Returns (ids, feature_names, base_values, phi matrix)."""
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header or header[:2] != ["id", "base_value"]:
            raise ValueError(f"{path}: not an attribution CSV")
        names = header[2:]
        ids, bases, rows = [], [], []
        for row in reader:
            ids.append(row[0])
            bases.append(float(row[1]))
            rows.append([float(v) for v in row[2:]])
    return ids, names, np.asarray(bases), np.asarray(rows)


def write_beeswarm_csv(
    path, ids: Sequence[str], attributions: Sequence[Attribution], feature_names: Sequence[str]
) -> None:
    """Long-format (id, feature, phi, feature_value) for plotting tools."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "feature", "phi", "feature_value"])
        for pid, att in zip(ids, attributions):
            for j, name in enumerate(feature_names):
                writer.writerow(
                    [pid, name, repr(float(att.phi[j])), repr(float(att.feature_values[j]))]
                )


def write_summary_csv(path, stats: SummaryStats) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["rank", "feature", "mean_abs_shap", "mean_positive_shap", "mean_negative_shap"])
        for rank, idx in enumerate(stats.order, start=1):
            writer.writerow(
                [
                    rank,
                    stats.feature_names[idx],
                    repr(float(stats.mean_abs[idx])),
                    repr(float(stats.mean_pos[idx])),
                    repr(float(stats.mean_neg[idx])),
                ]
            )


def write_summary_json(path, stats: SummaryStats) -> None:
    d = {
        "ranking": [stats.feature_names[i] for i in stats.order],
        "mean_abs": {n: float(v) for n, v in zip(stats.feature_names, stats.mean_abs)},
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(d, f, indent=2, sort_keys=True)
        f.write("\n")
