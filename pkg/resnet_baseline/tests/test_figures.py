import csv
import subprocess
import sys

import numpy as np
import pytest

from plume_resnet.aggregate import channel_summary, write_channel_summary_csv
from plume_resnet.figures import (
    render_attribution_rows,
    render_beeswarm,
    render_channel_importance,
    render_figures,
    render_pr_roc,
)


def write_pr_csv(path, points):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["recall", "precision"])
        w.writerows(points)


def write_roc_csv(path, points):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["fpr", "tpr"])
        w.writerows(points)


def write_beeswarm_csv(path, n_features, n_samples=12, seed=0):
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "feature", "phi", "feature_value"])
        for s in range(n_samples):
            for j in range(n_features):
                w.writerow([f"s{s}", f"feat{j:02d}", rng.normal() * (j + 1), rng.normal()])


class TestGuards:
    def test_missing_input_raises(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="missing"):
            render_beeswarm(tmp_path / "nope.csv", tmp_path / "out.png")

    def test_empty_input_raises(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("id,feature,phi,feature_value\n")
        with pytest.raises(FileNotFoundError, match="empty"):
            render_beeswarm(path, tmp_path / "out.png")

    def test_render_figures_requires_some_input(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            render_figures(tmp_path)


class TestPanels:
    def test_pr_roc_smoke(self, tmp_path):
        pr = tmp_path / "pr.csv"
        roc = tmp_path / "roc.csv"
        write_pr_csv(pr, [(0.5, 1.0), (0.5, 0.5), (1.0, 2 / 3)])
        write_roc_csv(roc, [(0.0, 0.0), (0.0, 0.5), (1.0, 0.5), (1.0, 1.0)])
        out = render_pr_roc({"forest": pr}, {"forest": roc}, tmp_path / "panels.png")
        assert out.stat().st_size > 0

    def test_beeswarm_top10_default_and_all_when_asked(self, tmp_path):
        bee = tmp_path / "bee.csv"
        write_beeswarm_csv(bee, n_features=41)
        rendered = render_beeswarm(bee, tmp_path / "b10.png")
        assert len(rendered) == 10
        rendered_all = render_beeswarm(bee, tmp_path / "b41.png", top=None)
        assert len(rendered_all) == 41
        assert (tmp_path / "b10.png").stat().st_size > 0

    def test_channel_importance_smoke(self, tmp_path):
        phi = np.random.default_rng(1).normal(size=(20, 15))
        names = [f"ch{i}" for i in range(15)]
        summary_csv = tmp_path / "summary.csv"
        write_channel_summary_csv(summary_csv, names, *channel_summary(phi))
        out = render_channel_importance(summary_csv, tmp_path / "imp.png")
        assert out.stat().st_size > 0

    def test_attribution_rows_smoke(self, tmp_path):
        rng = np.random.default_rng(2)
        channels = rng.normal(size=(15, 32, 32))
        attr = rng.normal(size=(15, 32, 32))
        names = [f"ch{i}" for i in range(15)]
        out = render_attribution_rows(
            channels, attr, names, ["ch0", "ch3", "ch7"], tmp_path / "rows.png",
            title="classified as plume",
        )
        assert out.stat().st_size > 0
        with pytest.raises(ValueError, match="unknown"):
            render_attribution_rows(channels, attr, names, ["bogus"], tmp_path / "x.png")


class TestPipelineArtifacts:
    def test_renders_real_eval_exports(self, tmp_path):
        """Drive the screening CLI end to end and render its artifacts."""
        def cli(*args):
            subprocess.run(
                [sys.executable, "-m", "plumescreen.cli", *map(str, args)],
                check=True, capture_output=True,
            )

        cli("generate", "--seed", 3, "--n", 60, "--plume-fraction", 0.5,
            "--out", tmp_path / "p.spk", "--out-dir", tmp_path)
        cli("extract", "--pack", tmp_path / "p.spk", "--out", tmp_path / "f.csv",
            "--out-dir", tmp_path)
        params = tmp_path / "params.json"
        params.write_text(
            '{"n_estimators": 10, "criterion": "gini", "min_samples_split": 4,'
            ' "max_features": "sqrt", "max_depth": 6, "max_samples": 0.9,'
            ' "min_samples_leaf": 2}'
        )
        cli("train", "--features", tmp_path / "f.csv", "--kind", "forest",
            "--params", params, "--out", tmp_path / "m.json", "--out-dir", tmp_path)
        cli("eval", "--model", tmp_path / "m.json", "--features", tmp_path / "f.csv",
            "--out-dir", tmp_path)
        cli("explain", "--model", tmp_path / "m.json", "--features", tmp_path / "f.csv",
            "--limit", 16, "--out-dir", tmp_path)
        produced = render_figures(
            tmp_path / "figs",
            pr_points={"forest": tmp_path / "forest_pr_points.csv"},
            roc_points={"forest": tmp_path / "forest_roc_points.csv"},
            beeswarm=tmp_path / "forest_beeswarm.csv",
        )
        assert all(p.stat().st_size > 0 for p in produced)
