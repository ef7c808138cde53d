#!/usr/bin/env python3
"""Metrics, cross-validation and random hyperparameter search.

Shows the PR/ROC machinery on a tiny worked example, then runs a small
random search over the forest space under stratified 5-fold CV.
"""

import numpy as np

from plumescreen import evalkit, featurex, learners
from plumescreen.evalkit import Categorical, ScoredSet, SearchSpace, Uniform
from plumescreen.synthgen import GenConfig, generate

# ---------------------------------------------------------------------
# 1. Worked example: three samples, scores [0.9, 0.8, 0.3], labels [1, 0, 1].
s = ScoredSet(scores=np.array([0.9, 0.8, 0.3]), labels=np.array([1, 0, 1]))
print("PR points (recall, precision):")
for r, p in evalkit.pr_curve(s):
    print(f"  ({r:.3f}, {p:.3f})")
print(f"AP  = {evalkit.average_precision(s):.6f}  (= 5/6)")
print(f"AUC = {evalkit.roc_auc(s):.6f}  (one of two pos/neg pairs is ordered correctly)")

# ---------------------------------------------------------------------
# 2. Random search over a small forest space, maximizing mean fold AP.
patches = generate(GenConfig(seed=3, n_scenes=150, plume_fraction=0.66))
ids, labels, X, _ = featurex.extract_matrix(patches)
y = featurex.labels_to_binary(labels)

space = SearchSpace(dims={
    "n_estimators": Categorical((10, 25, 50)),
    "criterion": Categorical(("gini", "entropy")),
    "min_samples_split": Categorical((2, 4, 8)),
    "max_features": Categorical(("sqrt", 0.6)),
    "max_depth": Categorical((None, 5, 10)),
    "max_samples": Uniform(0.6, 1.0),
    "min_samples_leaf": Categorical((1, 2, 5)),
})


def trainer(params, Xtr, ytr, seed):
    fp = learners.params_from_dict("forest", params)
    return learners.train_forest(Xtr, ytr, fp, seed=seed,
                                 feature_names=list(featurex.FEATURE_NAMES))


best, trials = evalkit.random_search(space, n_trials=6, trainer=trainer,
                                     X=X, y=y, k=5, seed=1)
print("\ntrial log (mean AP over 5 folds):")
for t in trials:
    print(f"  trial {t.trial}: mean AP {t.mean_ap:.4f}  "
          f"n_estimators={t.params['n_estimators']}, depth={t.params['max_depth']}")
print("\nbest configuration:", best)

# The winning config's fold metrics in the cross-validation report shape.
winner = max((t for t in trials if t.error is None), key=lambda t: t.mean_ap)
report = evalkit.cv_report("forest", winner.fold_metrics)
m = report["metrics"]
for metric in ("average_precision", "roc_auc", "balanced_accuracy"):
    print(f"  {metric:20s} {m[metric]['mean']:.3f} +/- {m[metric]['std']:.3f}")
