"""Hyperparameter records for the three feature-based classifiers.

Defaults are the best-found configurations of the screening study's random
search over the published spaces.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Mapping


class ParamError(ValueError):
    """Invalid hyperparameter value."""


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 500
    criterion: str = "entropy"
    min_samples_split: int = 8
    max_features: str | float = "sqrt"
    max_depth: int | None = None
    max_samples: float = 0.9206
    min_samples_leaf: int = 5

    def __post_init__(self) -> None:
        if self.n_estimators < 1:
            raise ParamError("n_estimators must be positive")
        if self.criterion not in ("gini", "entropy"):
            raise ParamError("criterion must be 'gini' or 'entropy'")
        if self.min_samples_split < 2:
            raise ParamError("min_samples_split must be >= 2")
        if isinstance(self.max_features, str):
            if self.max_features not in ("sqrt", "log2"):
                raise ParamError("max_features must be 'sqrt', 'log2' or a fraction")
        elif not (0.0 < float(self.max_features) <= 1.0):
            raise ParamError("max_features fraction must lie in (0, 1]")
        if self.max_depth is not None and self.max_depth < 1:
            raise ParamError("max_depth must be positive or None")
        if not (0.0 < self.max_samples <= 1.0):
            raise ParamError("max_samples must lie in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ParamError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class BoostedParams:
    n_estimators: int = 800
    learning_rate: float = 0.026
    gamma: float = 0.046
    max_depth: int = 6
    min_child_weight: float = 1.0
    subsample: float = 0.940
    colsample_bytree: float = 0.732
    reg_alpha: float = 4.467e-8
    reg_lambda: float = 0.347

    def __post_init__(self) -> None:
        if self.n_estimators < 1:
            raise ParamError("n_estimators must be positive")
        if self.learning_rate < 0.0:  # 0 is the documented zero-step edge case
            raise ParamError("learning_rate must be nonnegative")
        if self.gamma < 0.0:
            raise ParamError("gamma must be nonnegative")
        if self.max_depth < 1:
            raise ParamError("max_depth must be positive")
        if self.min_child_weight < 0.0:
            raise ParamError("min_child_weight must be nonnegative")
        if not (0.0 < self.subsample <= 1.0):
            raise ParamError("subsample must lie in (0, 1]")
        if not (0.0 < self.colsample_bytree <= 1.0):
            raise ParamError("colsample_bytree must lie in (0, 1]")
        if self.reg_alpha < 0.0 or self.reg_lambda < 0.0:
            raise ParamError("regularization terms must be nonnegative")


@dataclass(frozen=True)
class SvcParams:
    C: float = 10.564
    kernel: str = "rbf"
    gamma: float = 0.0027
    degree: int = 4

    def __post_init__(self) -> None:
        if self.C <= 0.0:
            raise ParamError("C must be positive")
        if self.kernel not in ("rbf", "linear", "poly"):
            raise ParamError("kernel must be 'rbf', 'linear' or 'poly'")
        if self.gamma <= 0.0:
            raise ParamError("gamma must be positive")
        if int(self.degree) != self.degree or self.degree < 2:
            raise ParamError("degree must be an integer >= 2")


PARAM_CLASSES = {"forest": ForestParams, "boosted": BoostedParams, "svc": SvcParams}


def params_from_dict(kind: str, d: Mapping) -> ForestParams | BoostedParams | SvcParams:
    cls = PARAM_CLASSES.get(kind)
    if cls is None:
        raise ParamError(f"unknown model kind {kind!r}")
    try:
        return cls(**dict(d))
    except TypeError as exc:
        raise ParamError(str(exc)) from None


def params_to_dict(params) -> dict:
    return asdict(params)
