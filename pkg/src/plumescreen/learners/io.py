"""Versioned JSON serialization for trained models."""

from __future__ import annotations

import json

import numpy as np

from ._tree import Tree
from .boosted import BoostedModel
from .forest import ForestModel
from .params import params_from_dict, params_to_dict
from .svc import Scaler, SvcModel

MODEL_FORMAT = "plumescreen-model"
MODEL_VERSION = 1


class ModelFormatError(ValueError):
    """Model file is malformed or has an unsupported layout."""


def model_to_dict(model) -> dict:
    d = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "feature_names": list(model.feature_names),
        "hyperparams": params_to_dict(model.params),
        "seed": int(model.seed),
    }
    if model.kind in ("forest", "boosted"):
        d["trees"] = [tree.to_dict() for tree in model.trees]
        if model.kind == "boosted":
            d["base_score"] = float(model.base_score)
    elif model.kind == "svc":
        d["svm"] = {
            "support_vectors": model.support_vectors.tolist(),
            "dual_coefs": model.dual_coefs.tolist(),
            "bias": float(model.bias),
            "scaler": {
                "mean": model.scaler.mean.tolist(),
                "std": model.scaler.std.tolist(),
            },
        }
    else:
        raise ModelFormatError(f"unknown model kind {model.kind!r}")
    return d


def model_from_dict(d: dict):
    if not isinstance(d, dict) or d.get("format") != MODEL_FORMAT:
        raise ModelFormatError("not a model file")
    if d.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {d.get('version')!r}")
    kind = d.get("kind")
    try:
        names = list(d["feature_names"])
        params = params_from_dict(kind, d["hyperparams"])
        seed = int(d["seed"])
        if kind == "forest":
            trees = [Tree.from_dict(t) for t in d["trees"]]
            return ForestModel(
                kind="forest", trees=trees, feature_names=names, params=params, seed=seed
            )
        if kind == "boosted":
            trees = [Tree.from_dict(t) for t in d["trees"]]
            return BoostedModel(
                kind="boosted",
                trees=trees,
                feature_names=names,
                params=params,
                seed=seed,
                base_score=float(d["base_score"]),
            )
        if kind == "svc":
            svm = d["svm"]
            n_features = len(names)
            sv = np.asarray(svm["support_vectors"], dtype=np.float64).reshape(-1, n_features)
            return SvcModel(
                kind="svc",
                support_vectors=sv,
                dual_coefs=np.asarray(svm["dual_coefs"], dtype=np.float64),
                bias=float(svm["bias"]),
                scaler=Scaler(
                    mean=np.asarray(svm["scaler"]["mean"], dtype=np.float64),
                    std=np.asarray(svm["scaler"]["std"], dtype=np.float64),
                ),
                feature_names=names,
                params=params,
                seed=seed,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt model file: {exc}") from None
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f, separators=(",", ":"))
        f.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"corrupt model file: {exc}") from None
    return model_from_dict(d)
