"""Attribution aggregation shared with the feature-based explainability.

The channel summary uses the same formulas as the tree-model summary:
importance = mean |phi| across samples, plus mean positive / negative
parts, ranked descending with ties broken by canonical order.
"""

from __future__ import annotations

import csv

import numpy as np


def channel_summary(phi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(mean_abs, mean_pos, mean_neg, order) over a (samples, channels) matrix."""
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 2 or phi.shape[0] == 0:
        raise ValueError("need a nonempty (samples, channels) matrix")
    mean_abs = np.abs(phi).mean(axis=0)
    mean_pos = np.clip(phi, 0.0, None).mean(axis=0)
    mean_neg = np.clip(phi, None, 0.0).mean(axis=0)
    order = np.argsort(-mean_abs, kind="stable")
    return mean_abs, mean_pos, mean_neg, order


def read_wide_attribution_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    """Read an `id, base_value, <names...>` attribution CSV: (ids, names, phi)."""
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header or header[:2] != ["id", "base_value"]:
            raise ValueError(f"{path}: not an attribution CSV")
        names = header[2:]
        ids, rows = [], []
        for row in reader:
            ids.append(row[0])
            rows.append([float(v) for v in row[2:]])
    return ids, names, np.asarray(rows, dtype=np.float64)


def write_channel_summary_csv(path, names, mean_abs, mean_pos, mean_neg, order) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["rank", "channel", "mean_abs_shap", "mean_positive_shap", "mean_negative_shap"]
        )
        for rank, idx in enumerate(order, start=1):
            writer.writerow(
                [rank, names[idx], repr(float(mean_abs[idx])),
                 repr(float(mean_pos[idx])), repr(float(mean_neg[idx]))]
            )


def read_channel_summary_csv(path) -> dict:
    """{channel: (mean_abs, mean_pos, mean_neg)} plus the ranking order."""
    out = {}
    ranking = []
    with open(path, "r", newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            name = row.get("channel") or row.get("feature")
            ranking.append(name)
            out[name] = (
                float(row["mean_abs_shap"]),
                float(row["mean_positive_shap"]),
                float(row["mean_negative_shap"]),
            )
    return {"stats": out, "ranking": ranking}
