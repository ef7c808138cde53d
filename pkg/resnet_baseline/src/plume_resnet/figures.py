"""Figure rendering for the whole repository's CSV/JSON artifacts.

Consumes the plot-ready exports of the screening pipeline (PR/ROC point
CSVs, long-format beeswarm CSVs, channel summaries) and the local
attribution maps of this component. Everything renders headless (Agg).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .aggregate import read_channel_summary_csv


def _require(path) -> Path:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing figure input: {path}")
    return path


def _read_points(path, x_col, y_col):
    with open(_require(path), newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise FileNotFoundError(f"empty figure input: {path}")
    x = np.asarray([float(r[x_col]) for r in rows])
    y = np.asarray([float(r[y_col]) for r in rows])
    return x, y


def render_pr_roc(pr_points: dict, roc_points: dict, out_path) -> Path:
    """Two-panel figure: PR curves (left) and ROC curves (right) per model."""
    fig, (ax_pr, ax_roc) = plt.subplots(1, 2, figsize=(11, 4.5))
    for label, path in pr_points.items():
        recall, precision = _read_points(path, "recall", "precision")
        ax_pr.plot(np.concatenate([[0.0], recall]),
                   np.concatenate([[1.0], precision]),
                   drawstyle="steps-post", label=label)
    ax_pr.set_xlabel("recall")
    ax_pr.set_ylabel("precision")
    ax_pr.set_title("precision-recall")
    ax_pr.set_xlim(0, 1.02)
    ax_pr.set_ylim(0, 1.02)
    ax_pr.legend()
    for label, path in roc_points.items():
        fpr, tpr = _read_points(path, "fpr", "tpr")
        ax_roc.plot(fpr, tpr, label=label)
    ax_roc.plot([0, 1], [0, 1], ls=":", c="gray", lw=1)
    ax_roc.set_xlabel("false positive rate")
    ax_roc.set_ylabel("true positive rate")
    ax_roc.set_title("ROC")
    ax_roc.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return Path(out_path)


def render_beeswarm(beeswarm_csv, out_path, top: int | None = 10) -> list[str]:
    """Beeswarm-style summary from the long-format export.

    Shows the `top` features by mean |phi| (all of them when top is None);
    points are colored by the feature value, jittered vertically. Returns
    the rendered feature names, most important first.
    """
    with open(_require(beeswarm_csv), newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise FileNotFoundError(f"empty figure input: {beeswarm_csv}")
    by_feature: dict[str, list[tuple[float, float]]] = {}
    for r in rows:
        by_feature.setdefault(r["feature"], []).append(
            (float(r["phi"]), float(r["feature_value"]))
        )
    ranked = sorted(
        by_feature, key=lambda n: -float(np.abs([p for p, _ in by_feature[n]]).mean())
    )
    if top is not None:
        ranked = ranked[:top]
    fig, ax = plt.subplots(figsize=(8, 0.45 * len(ranked) + 1.5))
    rng = np.random.default_rng(0)
    for row_idx, name in enumerate(reversed(ranked)):
        pts = by_feature[name]
        phi = np.asarray([p for p, _ in pts])
        vals = np.asarray([v for _, v in pts])
        spread = vals.max() - vals.min()
        colors = (vals - vals.min()) / spread if spread > 0 else np.full(vals.size, 0.5)
        ax.scatter(phi, row_idx + rng.uniform(-0.25, 0.25, phi.size),
                   c=colors, cmap="coolwarm", s=12, alpha=0.8)
    ax.axvline(0.0, c="gray", lw=1)
    ax.set_yticks(range(len(ranked)), list(reversed(ranked)))
    ax.set_xlabel("attribution (phi)")
    ax.set_title(f"attribution summary ({len(ranked)} features)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return ranked


def render_channel_importance(channel_summary_csv, out_path) -> Path:
    """Two panels: mean |phi| per channel; mean positive/negative per channel."""
    summary = read_channel_summary_csv(_require(channel_summary_csv))
    names = summary["ranking"]
    mean_abs = [summary["stats"][n][0] for n in names]
    mean_pos = [summary["stats"][n][1] for n in names]
    mean_neg = [summary["stats"][n][2] for n in names]
    ypos = np.arange(len(names))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 0.4 * len(names) + 1.5))
    ax1.barh(ypos, mean_abs, color="steelblue")
    ax1.set_yticks(ypos, names)
    ax1.invert_yaxis()
    ax1.set_xlabel("mean |phi|")
    ax1.set_title("channel importance")
    ax2.barh(ypos, mean_pos, color="firebrick", label="mean positive")
    ax2.barh(ypos, mean_neg, color="navy", label="mean negative")
    ax2.set_yticks(ypos, names)
    ax2.invert_yaxis()
    ax2.axvline(0.0, c="gray", lw=1)
    ax2.set_xlabel("mean phi")
    ax2.set_title("signed contributions")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return Path(out_path)


def render_attribution_rows(
    channel_values: np.ndarray,
    attributions: np.ndarray,
    channel_names: list[str],
    selected: list[str],
    out_path,
    title: str = "",
) -> Path:
    """Paired rows: selected channel values on top, their attributions below."""
    missing = [n for n in selected if n not in channel_names]
    if missing:
        raise ValueError(f"unknown channels: {missing}")
    k = len(selected)
    fig, axes = plt.subplots(2, k, figsize=(2.6 * k, 5.4), squeeze=False)
    for col, name in enumerate(selected):
        idx = channel_names.index(name)
        ax = axes[0][col]
        ax.imshow(channel_values[idx], cmap="viridis")
        ax.set_title(name, fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
        ax = axes[1][col]
        att = attributions[idx]
        vmax = np.abs(att).max() or 1.0
        ax.imshow(att, cmap="coolwarm", vmin=-vmax, vmax=vmax)
        ax.set_title("attribution", fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return Path(out_path)


def render_figures(out_dir, pr_points=None, roc_points=None, beeswarm=None,
                   channel_summary=None) -> list[Path]:
    """Render whichever standard panels the given artifacts support."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    produced: list[Path] = []
    if pr_points or roc_points:
        if not (pr_points and roc_points):
            raise FileNotFoundError("PR/ROC panels need both point-CSV sets")
        produced.append(render_pr_roc(pr_points, roc_points, out_dir / "pr_roc.png"))
    if beeswarm is not None:
        render_beeswarm(beeswarm, out_dir / "beeswarm.png")
        produced.append(out_dir / "beeswarm.png")
    if channel_summary is not None:
        produced.append(
            render_channel_importance(channel_summary, out_dir / "channel_importance.png")
        )
    if not produced:
        raise FileNotFoundError("no figure inputs given")
    return produced
