#!/usr/bin/env python3
"""Scene patches and the pack container.

Builds a patch by hand, decodes its detector masks, and shows that the
pack container round-trips bit-exactly.
"""

import tempfile
from pathlib import Path

import numpy as np

from plumescreen.scene import (
    CHANNELS,
    GRID,
    ScenePatch,
    derive_masks,
    read_pack,
    write_pack,
)

# ---------------------------------------------------------------------
# 1. A patch is 15 fixed channels of 32x32 float32 plus a validity mask.
print("channel registry:")
for i, name in enumerate(CHANNELS):
    print(f"  {i:2d} {name}")

channels = {name: np.zeros((GRID, GRID), dtype=np.float32) for name in CHANNELS}
channels["xch4_corrected"] += 1870.0
channels["surface_pressure"] += 101325.0
channels["qa_value"] += 0.9
channels["chi2"] += 1.1

# Paint a small "detection": enhancement blob + encoded plume mask.
yy, xx = np.mgrid[0:GRID, 0:GRID]
blob = 60.0 * np.exp(-(((xx - 16) ** 2) / 18 + ((yy - 16) ** 2) / 6))
channels["enhancement"] = blob.astype(np.float32)
channels["xch4_corrected"] += channels["enhancement"]
cnn_score = 0.83  # first-stage detector confidence
channels["plume_mask"] = np.where(blob > 30.0, cnn_score, 0.0).astype(np.float32)

# A corner of the swath has no retrievals: NaN everywhere + valid=False.
valid = np.ones((GRID, GRID), dtype=bool)
valid[:4, :4] = False
grids = np.stack([channels[name] for name in CHANNELS])
grids[:, ~valid] = np.nan

patch = ScenePatch(grids=grids, valid=valid, label="plume", meta={"id": "demo-0001"})
print(f"\npatch {patch.patch_id}: label={patch.label}, "
      f"valid pixels={int(patch.valid.sum())}/1024")

# ---------------------------------------------------------------------
# 2. Masks decode from the plume_mask channel: high = positive values,
#    low = one dilation, cnn_score = the encoded maximum.
masks = derive_masks(patch)
print(f"high mask: {int(masks.high.sum())} px, low mask: {int(masks.low.sum())} px, "
      f"cnn score: {masks.cnn_score}")
assert (masks.high <= masks.low).all()

# ---------------------------------------------------------------------
# 3. Pack round trip is the identity, down to the float bits.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demo.spk"
    write_pack([patch], path)
    (back,) = read_pack(path)
    print(f"\npack file: {path.stat().st_size} bytes")
    print("float payload identical:", back.grids.tobytes() == patch.grids.tobytes())
    print("meta identical:", back.meta == patch.meta)
