"""Native feature-based classifiers: random forest, boosted trees, kernel SVM."""

from ._tree import Tree
from .boosted import BoostedModel, train_boosted
from .forest import ForestModel, TrainingError, train_forest
from .io import ModelFormatError, load_model, model_from_dict, model_to_dict, save_model
from .params import (
    PARAM_CLASSES,
    BoostedParams,
    ForestParams,
    ParamError,
    SvcParams,
    params_from_dict,
    params_to_dict,
)
from .svc import ConvergenceError, SvcModel, train_svc

MODEL_KINDS = ("forest", "boosted", "svc")


def train(kind: str, X, y, params=None, seed: int = 0, feature_names=None, threads: int = 1):
    """Uniform trainer entry point used by the CLI and the search driver."""
    if kind == "forest":
        return train_forest(X, y, params, seed, feature_names, threads=threads)
    if kind == "boosted":
        return train_boosted(X, y, params, seed, feature_names)
    if kind == "svc":
        return train_svc(X, y, params, seed, feature_names)
    raise ParamError(f"unknown model kind {kind!r}")


__all__ = [
    "Tree",
    "BoostedModel",
    "ForestModel",
    "SvcModel",
    "BoostedParams",
    "ForestParams",
    "SvcParams",
    "ParamError",
    "TrainingError",
    "ConvergenceError",
    "ModelFormatError",
    "PARAM_CLASSES",
    "MODEL_KINDS",
    "train",
    "train_forest",
    "train_boosted",
    "train_svc",
    "save_model",
    "load_model",
    "model_to_dict",
    "model_from_dict",
    "params_from_dict",
    "params_to_dict",
]
