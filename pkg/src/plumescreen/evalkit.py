"""Evaluation kit: PR/AP, ROC/AUC, balanced accuracy, stratified k-fold CV
and random hyperparameter search maximizing mean average precision.

Score ties define a single threshold, so AP/AUC match their pairwise and
threshold-enumeration definitions exactly.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Mapping, Sequence

import numpy as np

METRIC_NAMES = ("average_precision", "roc_auc", "balanced_accuracy")


class MetricError(ValueError):
    """Scored set unfit for the requested metric."""


@dataclass(frozen=True)
class ScoredSet:
    """Per-sample scores and binary labels."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        scores = np.ascontiguousarray(np.asarray(self.scores, dtype=np.float64))
        labels = np.asarray(self.labels)
        if scores.ndim != 1 or labels.shape != scores.shape:
            raise MetricError("scores and labels must be equal-length 1-D arrays")
        if scores.size < 1:
            raise MetricError("scored set must be nonempty")
        if not np.isfinite(scores).all():
            raise MetricError("scores must be finite")
        if not np.isin(labels, (0, 1)).all():
            raise MetricError("labels must be 0/1")
        labels = labels.astype(np.int64)
        scores.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def n_neg(self) -> int:
        return int(self.labels.size - self.labels.sum())

    def require_both_classes(self) -> None:
        if self.n_pos == 0 or self.n_neg == 0:
            raise MetricError("metric requires both classes present")


def _threshold_counts(s: ScoredSet) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative (tp, fp) after each distinct score threshold, descending."""
    order = np.argsort(-s.scores, kind="stable")
    sorted_scores = s.scores[order]
    sorted_labels = s.labels[order]
    # Last index of each tie block = one threshold.
    boundary = np.nonzero(np.diff(sorted_scores))[0]
    boundary = np.append(boundary, sorted_scores.size - 1)
    tp = np.cumsum(sorted_labels)[boundary].astype(np.float64)
    fp = (boundary + 1).astype(np.float64) - tp
    return tp, fp


def pr_curve(s: ScoredSet) -> np.ndarray:
    """(recall, precision) at each distinct threshold, swept descending."""
    s.require_both_classes()
    tp, fp = _threshold_counts(s)
    recall = tp / s.n_pos
    precision = tp / (tp + fp)
    return np.column_stack([recall, precision])


def average_precision(s: ScoredSet) -> float:
    """Step-interpolated area under the PR curve: sum (R_n - R_{n-1}) P_n."""
    points = pr_curve(s)
    recall = points[:, 0]
    precision = points[:, 1]
    dr = np.diff(np.concatenate([[0.0], recall]))
    return float(np.sum(dr * precision))


def roc_curve(s: ScoredSet) -> np.ndarray:
    """(fpr, tpr) polyline from (0, 0) through each distinct threshold."""
    s.require_both_classes()
    tp, fp = _threshold_counts(s)
    tpr = np.concatenate([[0.0], tp / s.n_pos])
    fpr = np.concatenate([[0.0], fp / s.n_neg])
    return np.column_stack([fpr, tpr])


def roc_auc(s: ScoredSet) -> float:
    """Trapezoidal area under the ROC curve (ties count 1/2)."""
    points = roc_curve(s)
    x = points[:, 0]
    y = points[:, 1]
    return float(np.sum(np.diff(x) * 0.5 * (y[1:] + y[:-1])))


def balanced_accuracy(s: ScoredSet, threshold: float = 0.5) -> float:
    """Mean of sensitivity and specificity with prediction = score >= threshold."""
    s.require_both_classes()
    pred = s.scores >= threshold
    pos = s.labels == 1
    tpr = float(pred[pos].sum()) / s.n_pos
    tnr = float((~pred[~pos]).sum()) / s.n_neg
    return 0.5 * (tpr + tnr)


def stratified_kfold(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """k disjoint test-fold index arrays with per-class counts within 1."""
    y = np.asarray(y)
    if k < 2:
        raise MetricError("k must be >= 2")
    folds: list[list[int]] = [[] for _ in range(k)]
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xF,)))
    for cls in np.unique(y):
        idx = np.nonzero(y == cls)[0]
        if idx.size < k:
            raise MetricError(f"class {cls!r} has fewer samples ({idx.size}) than folds ({k})")
        idx = idx[rng.permutation(idx.size)]
        for i, j in enumerate(idx):
            folds[i % k].append(int(j))
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


# ---------------------------------------------------------------------------
# Search spaces


@dataclass(frozen=True)
class Categorical:
    values: tuple

    def sample(self, rng: np.random.Generator):
        return self.values[int(rng.integers(len(self.values)))]


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise MetricError("Uniform requires lo < hi")

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class LogUniform:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (0.0 < self.lo < self.hi):
            raise MetricError("LogUniform requires 0 < lo < hi")

    def sample(self, rng: np.random.Generator) -> float:
        return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))


@dataclass(frozen=True)
class SearchSpace:
    dims: Mapping[str, Categorical | Uniform | LogUniform]

    def sample(self, rng: np.random.Generator) -> dict:
        return {name: dim.sample(rng) for name, dim in self.dims.items()}

    def to_dict(self) -> dict:
        out = {}
        for name, dim in self.dims.items():
            if isinstance(dim, Categorical):
                out[name] = {"type": "categorical", "values": list(dim.values)}
            elif isinstance(dim, Uniform):
                out[name] = {"type": "uniform", "lo": dim.lo, "hi": dim.hi}
            else:
                out[name] = {"type": "loguniform", "lo": dim.lo, "hi": dim.hi}
        return out

    @classmethod
    def from_dict(cls, d: Mapping) -> "SearchSpace":
        dims: dict = {}
        for name, spec in d.items():
            kind = spec.get("type")
            if kind == "categorical":
                dims[name] = Categorical(tuple(spec["values"]))
            elif kind == "uniform":
                dims[name] = Uniform(float(spec["lo"]), float(spec["hi"]))
            elif kind == "loguniform":
                dims[name] = LogUniform(float(spec["lo"]), float(spec["hi"]))
            else:
                raise MetricError(f"dimension {name!r}: unknown type {kind!r}")
        return cls(dims=dims)

    @classmethod
    def from_json(cls, path) -> "SearchSpace":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def load_space(name: str) -> SearchSpace:
    """Packaged default search space: forest, boosted, svc or resnet."""
    ref = resources.files("plumescreen").joinpath(f"spaces/{name}.json")
    with ref.open("r", encoding="utf-8") as f:
        return SearchSpace.from_dict(json.load(f))


# ---------------------------------------------------------------------------
# Random search


@dataclass
class TrialResult:
    trial: int
    params: dict
    fold_metrics: list[dict] = field(default_factory=list)  # one dict per fold
    mean_ap: float = math.nan
    error: str | None = None


def crossval_metrics(
    trainer: Callable,
    params: dict,
    X: np.ndarray,
    y: np.ndarray,
    folds: Sequence[np.ndarray],
    seed: int,
) -> list[dict]:
    """Per-fold AP / ROC-AUC / balanced accuracy for one configuration."""
    out = []
    all_idx = np.arange(y.shape[0])
    for test_idx in folds:
        train_mask = np.ones(y.shape[0], dtype=bool)
        train_mask[test_idx] = False
        train_idx = all_idx[train_mask]
        model = trainer(params, X[train_idx], y[train_idx], seed)
        scored = ScoredSet(scores=model.score(X[test_idx]), labels=y[test_idx])
        out.append(
            {
                "average_precision": average_precision(scored),
                "roc_auc": roc_auc(scored),
                "balanced_accuracy": balanced_accuracy(scored, model.decision_threshold),
            }
        )
    return out


def random_search(
    space: SearchSpace,
    n_trials: int,
    trainer: Callable,
    X: np.ndarray,
    y: np.ndarray,
    k: int = 5,
    seed: int = 0,
    threads: int = 1,
) -> tuple[dict, list[TrialResult]]:
    """Sample n_trials configs i.i.d. and return the argmax of mean fold AP.

    The trial log is ordered by trial index; a failing trial is recorded
    and skipped. Raises if every trial fails.
    """
    if n_trials < 1:
        raise MetricError("n_trials must be >= 1")
    folds = stratified_kfold(y, k, seed)
    configs = [space.sample(np.random.default_rng([seed, t])) for t in range(n_trials)]

    def run(t: int) -> TrialResult:
        result = TrialResult(trial=t, params=configs[t])
        try:
            fold_metrics = crossval_metrics(trainer, configs[t], X, y, folds, seed)
        except Exception as exc:  # noqa: BLE001 - trial isolation is the contract
            result.error = f"{type(exc).__name__}: {exc}"
            return result
        result.fold_metrics = fold_metrics
        result.mean_ap = float(np.mean([m["average_precision"] for m in fold_metrics]))
        return result

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trials = list(pool.map(run, range(n_trials)))
    else:
        trials = [run(t) for t in range(n_trials)]

    best: TrialResult | None = None
    for trial in trials:
        if trial.error is not None:
            continue
        if best is None or trial.mean_ap > best.mean_ap:
            best = trial
    if best is None:
        raise RuntimeError("random search failed: every trial errored")
    return best.params, trials


# ---------------------------------------------------------------------------
# Reports (cross-validation and hold-out shapes)


def _mean_std(values: Sequence[float]) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    # Population std over the k fold values (k is small and fixed).
    return {"mean": float(arr.mean()), "std": float(arr.std())}


def cv_report(model_name: str, fold_metrics: Sequence[Mapping]) -> dict:
    metrics = {
        name: _mean_std([m[name] for m in fold_metrics]) for name in METRIC_NAMES
    }
    return {
        "type": "cv",
        "model": model_name,
        "folds": len(fold_metrics),
        "metrics": metrics,
    }


def eval_report(model_name: str, scored: ScoredSet, threshold: float) -> dict:
    return {
        "type": "eval",
        "model": model_name,
        "metrics": {
            "average_precision": average_precision(scored),
            "roc_auc": roc_auc(scored),
            "balanced_accuracy": balanced_accuracy(scored, threshold),
        },
    }


def combine_reports(reports: Sequence[Mapping]) -> dict:
    """Merge per-model reports into one cross-validation + hold-out table pair."""
    combined: dict = {"cv": {}, "test": {}}
    for report in reports:
        section = "cv" if report.get("type") == "cv" else "test"
        combined[section][report["model"]] = report["metrics"]
    return combined


def write_trial_log_csv(path, trials: Sequence[TrialResult]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["trial", "fold", "ap", "roc_auc", "balanced_accuracy", "params"])
        for trial in trials:
            params_json = json.dumps(trial.params, separators=(",", ":"), sort_keys=True)
            if trial.error is not None:
                writer.writerow([trial.trial, "error", "", "", "", params_json])
                continue
            for fold, m in enumerate(trial.fold_metrics):
                writer.writerow(
                    [
                        trial.trial,
                        fold,
                        repr(m["average_precision"]),
                        repr(m["roc_auc"]),
                        repr(m["balanced_accuracy"]),
                        params_json,
                    ]
                )
