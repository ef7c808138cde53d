"""Soft-margin kernel SVM trained with sequential minimal optimization.

Features are z-scored inside the model (statistics from the training set).
Scores are signed decision-function values; the hard label sits at 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forest import TrainingError, _check_xy
from .params import SvcParams


class ConvergenceError(RuntimeError):
    """SMO failed to reach the KKT tolerance within the pass budget."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(f"{message}: {diagnostics}")
        self.diagnostics = diagnostics


def kernel_matrix(A: np.ndarray, B: np.ndarray, params: SvcParams) -> np.ndarray:
    if params.kernel == "linear":
        return A @ B.T
    if params.kernel == "poly":
        return (params.gamma * (A @ B.T) + 1.0) ** params.degree
    # rbf
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.clip(sq, 0.0, None, out=sq)
    return np.exp(-params.gamma * sq)


@dataclass
class Scaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std == 0.0, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.std


class _SMO:
    def __init__(self, K, y, C, tol, rng, max_passes):
        self.K = K
        self.y = y.astype(np.float64)
        self.C = float(C)
        self.tol = float(tol)
        self.eps = max(tol * 1e-3, 1e-15)
        self.rng = rng
        self.max_passes = int(max_passes)
        n = y.size
        self.alpha = np.zeros(n)
        self.b = 0.0
        # u_i = sum_j alpha_j y_j K_ij - b; with alpha = 0, E_i = -y_i.
        self.errors = -self.y.copy()
        self.n_steps = 0

    def _take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        K, y, alpha, C = self.K, self.y, self.alpha, self.C
        a1o, a2o = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        E1, E2 = self.errors[i1], self.errors[i2]
        s = y1 * y2
        if y1 != y2:
            L = max(0.0, a2o - a1o)
            H = min(C, C + a2o - a1o)
        else:
            L = max(0.0, a2o + a1o - C)
            H = min(C, a2o + a1o)
        if L >= H:
            return False
        k11, k12, k22 = K[i1, i1], K[i1, i2], K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0.0:
            a2 = a2o + y2 * (E1 - E2) / eta
            a2 = min(max(a2, L), H)
        else:
            # Objective at the box ends for a non-positive-definite pair.
            f1 = y1 * (E1 + self.b) - a1o * k11 - s * a2o * k12
            f2 = y2 * (E2 + self.b) - s * a1o * k12 - a2o * k22
            L1 = a1o + s * (a2o - L)
            H1 = a1o + s * (a2o - H)
            psi_l = L1 * f1 + L * f2 + 0.5 * L1 * L1 * k11 + 0.5 * L * L * k22 + s * L * L1 * k12
            psi_h = H1 * f1 + H * f2 + 0.5 * H1 * H1 * k11 + 0.5 * H * H * k22 + s * H * H1 * k12
            if psi_l < psi_h - self.eps:
                a2 = L
            elif psi_l > psi_h + self.eps:
                a2 = H
            else:
                a2 = a2o
        if abs(a2 - a2o) < self.eps * (a2 + a2o + self.eps):
            return False
        a1 = a1o + s * (a2o - a2)
        if a1 < 0.0:
            a2 += s * a1
            a1 = 0.0
        elif a1 > C:
            a2 += s * (a1 - C)
            a1 = C

        d1 = y1 * (a1 - a1o)
        d2 = y2 * (a2 - a2o)
        b1 = E1 + d1 * k11 + d2 * k12 + self.b
        b2 = E2 + d1 * k12 + d2 * k22 + self.b
        if 0.0 < a1 < C:
            b_new = b1
        elif 0.0 < a2 < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        self.errors += d1 * K[i1] + d2 * K[i2] - (b_new - self.b)
        alpha[i1] = a1
        alpha[i2] = a2
        self.b = b_new
        self.n_steps += 1
        return True

    def _examine(self, i2: int) -> int:
        y2 = self.y[i2]
        a2 = self.alpha[i2]
        E2 = self.errors[i2]
        r2 = E2 * y2
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0.0)):
            return 0
        non_bound = np.nonzero((self.alpha > 0.0) & (self.alpha < self.C))[0]
        if non_bound.size > 1:
            i1 = int(non_bound[np.argmax(np.abs(self.errors[non_bound] - E2))])
            if self._take_step(i1, i2):
                return 1
        if non_bound.size:
            start = int(self.rng.integers(non_bound.size))
            for k in range(non_bound.size):
                if self._take_step(int(non_bound[(start + k) % non_bound.size]), i2):
                    return 1
        n = self.y.size
        start = int(self.rng.integers(n))
        for k in range(n):
            if self._take_step((start + k) % n, i2):
                return 1
        return 0

    def solve(self) -> None:
        n = self.y.size
        num_changed = 0
        examine_all = True
        passes = 0
        while num_changed > 0 or examine_all:
            passes += 1
            if passes > self.max_passes:
                raise ConvergenceError(
                    "SMO did not converge",
                    {
                        "passes": passes,
                        "steps": self.n_steps,
                        "max_kkt_violation": float(self.max_violation()),
                        "n_support": int((self.alpha > 0).sum()),
                    },
                )
            num_changed = 0
            if examine_all:
                for i in range(n):
                    num_changed += self._examine(i)
            else:
                for i in np.nonzero((self.alpha > 0.0) & (self.alpha < self.C))[0]:
                    num_changed += self._examine(int(i))
            if examine_all:
                examine_all = False
            elif num_changed == 0:
                examine_all = True

    def max_violation(self) -> float:
        r = self.errors * self.y
        lower = np.where(self.alpha < self.C, np.maximum(-r, 0.0), 0.0)
        upper = np.where(self.alpha > 0.0, np.maximum(r, 0.0), 0.0)
        return float(np.maximum(lower, upper).max())


@dataclass
class SvcModel:
    kind: str
    support_vectors: np.ndarray  # standardized rows
    dual_coefs: np.ndarray  # alpha_i * y_i over support vectors
    bias: float
    scaler: Scaler
    feature_names: list[str]
    params: SvcParams
    seed: int

    #: Margins; classify at 0.
    decision_threshold: float = 0.0

    def score(self, X: np.ndarray) -> np.ndarray:
        """Signed decision-function value per row (higher = more plume-like)."""
        X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} feature columns")
        Z = self.scaler.transform(X)
        if self.support_vectors.size == 0:
            return np.full(X.shape[0], -self.bias)
        K = kernel_matrix(Z, self.support_vectors, self.params)
        return K @ self.dual_coefs - self.bias

    def raw_output(self, X: np.ndarray) -> np.ndarray:
        return self.score(X)


def train_svc(
    X: np.ndarray,
    y: np.ndarray,
    params: SvcParams | None = None,
    seed: int = 0,
    feature_names: list[str] | None = None,
    tol: float = 1e-3,
    max_passes: int = 2000,
) -> SvcModel:
    """Fit the SVC by SMO to the KKT tolerance; deterministic given the seed."""
    params = params or SvcParams()
    X, y01 = _check_xy(X, y)
    names = feature_names or [f"f{i}" for i in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise TrainingError("feature_names must match the number of columns")
    scaler = Scaler.fit(X)
    Z = scaler.transform(X)
    ysign = np.where(y01 == 1, 1.0, -1.0)
    K = kernel_matrix(Z, Z, params)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x53,)))
    smo = _SMO(K, ysign, params.C, tol, rng, max_passes)
    smo.solve()
    sv = smo.alpha > 0.0
    return SvcModel(
        kind="svc",
        support_vectors=Z[sv],
        dual_coefs=(smo.alpha * ysign)[sv],
        bias=float(smo.b),
        scaler=scaler,
        feature_names=list(names),
        params=params,
        seed=seed,
    )
