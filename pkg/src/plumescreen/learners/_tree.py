"""Flat-array decision trees shared by the forest and boosted learners.

Split search is deterministic: candidate features are scanned in ascending
index order, thresholds sit at midpoints of consecutive distinct sorted
values, and the first encountered best gain wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass
class Tree:
    """One fitted tree as parallel node arrays (preorder ids)."""

    feature: np.ndarray  # int32, -1 at leaves
    threshold: np.ndarray  # float64, NaN at leaves
    left: np.ndarray  # int32, -1 at leaves
    right: np.ndarray  # int32, -1 at leaves
    value: np.ndarray  # float64 node prediction
    n_samples: np.ndarray  # int64 training rows routed through each node

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Leaf value per row."""
        n = X.shape[0]
        cur = np.zeros(n, dtype=np.int64)
        while True:
            f = self.feature[cur]
            internal = f >= 0
            if not internal.any():
                break
            ii = np.nonzero(internal)[0]
            node = cur[ii]
            go_left = X[ii, f[ii]] <= self.threshold[node]
            cur[ii] = np.where(go_left, self.left[node], self.right[node])
        return self.value[cur]

    def to_dict(self) -> dict:
        nodes = []
        for i in range(self.n_nodes):
            nodes.append(
                {
                    "feature": int(self.feature[i]),
                    "threshold": None if self.feature[i] == LEAF else float(self.threshold[i]),
                    "left": int(self.left[i]),
                    "right": int(self.right[i]),
                    "value": float(self.value[i]),
                    "n_samples": int(self.n_samples[i]),
                }
            )
        return {"nodes": nodes}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        nodes = d["nodes"]
        n = len(nodes)
        feature = np.empty(n, dtype=np.int32)
        threshold = np.full(n, np.nan)
        left = np.empty(n, dtype=np.int32)
        right = np.empty(n, dtype=np.int32)
        value = np.empty(n)
        n_samples = np.empty(n, dtype=np.int64)
        for i, node in enumerate(nodes):
            feature[i] = node["feature"]
            if node["threshold"] is not None:
                threshold[i] = node["threshold"]
            left[i] = node["left"]
            right[i] = node["right"]
            value[i] = node["value"]
            n_samples[i] = node["n_samples"]
        return cls(feature, threshold, left, right, value, n_samples)


class _TreeBuilder:
    """Accumulates node arrays while a tree is grown."""

    def __init__(self) -> None:
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.n_samples: list[int] = []

    def add(self, value: float, n: int) -> int:
        self.feature.append(LEAF)
        self.threshold.append(np.nan)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(float(value))
        self.n_samples.append(int(n))
        return len(self.feature) - 1

    def make_split(self, node: int, feature: int, threshold: float) -> None:
        self.feature[node] = int(feature)
        self.threshold[node] = float(threshold)

    def finish(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.asarray(self.value, dtype=np.float64),
            n_samples=np.asarray(self.n_samples, dtype=np.int64),
        )


def _entropy(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    for q in (p, 1.0 - p):
        pos = q > 0.0
        out[pos] -= q[pos] * np.log2(q[pos])
    return out


def _gini(p: np.ndarray) -> np.ndarray:
    return 2.0 * p * (1.0 - p)


def best_classification_split(
    Xn: np.ndarray, yn: np.ndarray, min_leaf: int, criterion: str
) -> tuple[int, float, float] | None:
    """Best impurity-decrease split over the node submatrix.

    Returns (local feature index, threshold, gain) or None when no valid
    split has positive gain.
    """
    impurity = _entropy if criterion == "entropy" else _gini
    m = Xn.shape[0]
    if m < 2 * min_leaf or Xn.shape[1] == 0:
        return None
    order = np.argsort(Xn, axis=0, kind="stable")
    Xs = np.take_along_axis(Xn, order, axis=0)
    ys = yn.astype(np.float64)[order]
    cpos = np.cumsum(ys, axis=0)
    total_pos = cpos[-1, :]

    nL = np.arange(1, m, dtype=np.float64)[:, None]
    nR = m - nL
    posL = cpos[:-1, :]
    posR = total_pos[None, :] - posL
    parent = impurity(np.asarray([total_pos[0] / m]))[0]
    child = (nL * impurity(posL / nL) + nR * impurity(posR / nR)) / m
    gains = parent - child

    ok = Xs[1:, :] > Xs[:-1, :]
    ok &= (nL >= min_leaf) & (nR >= min_leaf)
    gains = np.where(ok, gains, -np.inf)

    best: tuple[int, float, float] | None = None
    for j in range(Xn.shape[1]):
        i = int(np.argmax(gains[:, j]))
        gain = float(gains[i, j])
        if gain <= 0.0 or not np.isfinite(gain):
            continue
        if best is None or gain > best[2]:
            thr = 0.5 * (Xs[i, j] + Xs[i + 1, j])
            if thr >= Xs[i + 1, j]:  # midpoint rounded up to the right value
                thr = float(Xs[i, j])
            best = (j, float(thr), gain)
    return best


def best_boosted_split(
    Xn: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    reg_lambda: float,
    gamma: float,
    min_child_weight: float,
) -> tuple[int, float, float] | None:
    """Best second-order gain split; gain is already net of gamma."""
    m = Xn.shape[0]
    if m < 2 or Xn.shape[1] == 0:
        return None
    order = np.argsort(Xn, axis=0, kind="stable")
    Xs = np.take_along_axis(Xn, order, axis=0)
    gs = np.cumsum(g[order], axis=0)
    hs = np.cumsum(h[order], axis=0)
    G = gs[-1, :]
    H = hs[-1, :]

    GL = gs[:-1, :]
    HL = hs[:-1, :]
    GR = G[None, :] - GL
    HR = H[None, :] - HL
    gains = 0.5 * (
        GL**2 / (HL + reg_lambda)
        + GR**2 / (HR + reg_lambda)
        - (G**2 / (H + reg_lambda))[None, :]
    ) - gamma

    ok = Xs[1:, :] > Xs[:-1, :]
    ok &= (HL >= min_child_weight) & (HR >= min_child_weight)
    gains = np.where(ok, gains, -np.inf)

    best: tuple[int, float, float] | None = None
    for j in range(Xn.shape[1]):
        i = int(np.argmax(gains[:, j]))
        gain = float(gains[i, j])
        if gain <= 0.0 or not np.isfinite(gain):
            continue
        if best is None or gain > best[2]:
            thr = 0.5 * (Xs[i, j] + Xs[i + 1, j])
            if thr >= Xs[i + 1, j]:
                thr = float(Xs[i, j])
            best = (j, float(thr), gain)
    return best
