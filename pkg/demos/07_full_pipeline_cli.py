#!/usr/bin/env python3
"""The whole pipeline through the command-line interface.

generate -> extract -> cv/search -> train -> eval -> explain -> report,
all inside a temporary directory, finishing with the combined report and
the reproducibility manifests.
"""

import json
import tempfile
from pathlib import Path

from plumescreen.cli import main

tmp = Path(tempfile.mkdtemp(prefix="plumescreen-demo-"))
print(f"working in {tmp}\n")


def run(*argv):
    argv = [str(a) for a in argv]
    print("  $ plumescreen " + " ".join(argv))
    code = main(argv)
    assert code == 0, f"exit code {code}"


# Small search space so the demo stays quick.
space = {
    "n_estimators": {"type": "categorical", "values": [15, 30]},
    "criterion": {"type": "categorical", "values": ["entropy"]},
    "min_samples_split": {"type": "categorical", "values": [4]},
    "max_features": {"type": "categorical", "values": ["sqrt"]},
    "max_depth": {"type": "categorical", "values": [8]},
    "max_samples": {"type": "uniform", "lo": 0.7, "hi": 1.0},
    "min_samples_leaf": {"type": "categorical", "values": [2]},
}
(tmp / "space.json").write_text(json.dumps(space))

run("generate", "--seed", 42, "--n", 200, "--plume-fraction", 0.68,
    "--out", tmp / "train.spk", "--out-dir", tmp)
run("generate", "--seed", 43, "--n", 80, "--plume-fraction", 0.5,
    "--out", tmp / "test.spk", "--out-dir", tmp)
run("extract", "--pack", tmp / "train.spk", "--out", tmp / "train.csv", "--out-dir", tmp)
run("extract", "--pack", tmp / "test.spk", "--out", tmp / "test.csv", "--out-dir", tmp)
run("cv", "--features", tmp / "train.csv", "--kind", "forest",
    "--space", tmp / "space.json", "--trials", 2, "--k", 5, "--seed", 7, "--out-dir", tmp)
run("train", "--features", tmp / "train.csv", "--kind", "forest",
    "--params", tmp / "forest_best_params.json", "--seed", 7,
    "--out", tmp / "forest.json", "--out-dir", tmp)
run("eval", "--model", tmp / "forest.json", "--features", tmp / "test.csv", "--out-dir", tmp)
run("explain", "--model", tmp / "forest.json", "--features", tmp / "test.csv",
    "--limit", 32, "--out-dir", tmp)
run("report", tmp / "forest_cv_report.json", tmp / "forest_metrics.json",
    "--out", tmp / "combined.json", "--out-dir", tmp)

print("\ncombined report:")
print(json.dumps(json.loads((tmp / "combined.json").read_text()), indent=2))

manifest = json.loads((tmp / "eval_manifest.json").read_text())
print("\neval manifest digests:")
for name, entry in manifest["outputs"].items():
    print(f"  {name:12s} sha256:{entry['sha256'][:16]}...")

print("\nartifacts:")
for p in sorted(tmp.iterdir()):
    print(f"  {p.name:32s} {p.stat().st_size:9d} bytes")
