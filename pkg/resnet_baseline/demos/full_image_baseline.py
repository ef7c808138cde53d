#!/usr/bin/env python3
"""The image-based baseline end to end on a tiny synthetic pack.

Generates data through the screening CLI, trains a ResNet-18 until it
memorizes the batch, computes expected-gradients attributions, and
renders the channel-importance figure plus one paired
channel/attribution row figure.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np
import torch

from plume_resnet import NetConfig, gradient_shap, read_pack, tensorize, train_net
from plume_resnet.aggregate import write_channel_summary_csv
from plume_resnet.figures import render_attribution_rows, render_channel_importance
from plume_resnet.packio import CHANNELS

tmp = Path(tempfile.mkdtemp(prefix="plume-resnet-demo-"))
pack_path = tmp / "scoreonly.spk"
subprocess.run(
    [sys.executable, "-m", "plumescreen.cli", "generate", "--mode", "score-only",
     "--seed", "8", "--n", "64", "--plume-fraction", "0.5",
     "--out", str(pack_path), "--out-dir", str(tmp)],
    check=True,
)
records = read_pack(pack_path)
print(f"loaded {len(records)} patches from {pack_path.name}")

result = train_net(records, NetConfig(depth=18, seed=0, epochs=200), stop_at_perfect=True)
print(f"trained to 100% batch accuracy in {result.epochs_to_perfect} epochs")

X = tensorize(records, result.normalizer)
att = gradient_shap(result.net, X[:16], X, reference_size=8, steps=16, seed=1)
print(f"worst completeness gap: {(att.completeness_gap / np.abs(att.delta_f)).max():.2%}")
print("channel ranking:", att.ranking()[:5])

summary_csv = tmp / "channel_summary.csv"
write_channel_summary_csv(summary_csv, list(att.channel_names),
                          att.mean_abs, att.mean_pos, att.mean_neg, att.order)
fig1 = render_channel_importance(summary_csv, tmp / "channel_importance.png")

# Pair the most important channels with their attributions for sample 0.
rec = records[0]
values = np.where(np.isfinite(rec.grids), rec.grids, 0.0)
fig2 = render_attribution_rows(
    values, att.per_sample_maps[0], list(CHANNELS),
    att.ranking()[:4], tmp / "attribution_rows.png",
    title=f"patch {rec.record_id} ({rec.label})",
)
print(f"figures: {fig1}\n         {fig2}")
