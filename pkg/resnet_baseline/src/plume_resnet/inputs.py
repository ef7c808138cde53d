"""Input assembly: per-channel normalization plus invalid-pixel handling.

Normalization statistics always come from the training split. Invalid
(NaN) pixels are imputed to the channel mean before scaling (so z-scored
invalid pixels become 0) and flagged through the validity mask, which is
concatenated as the 16th input channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from .packio import CHANNELS, N_CHANNELS, Record


@dataclass(frozen=True)
class Normalizer:
    kind: str
    center: np.ndarray  # (15,) subtracted first
    scale: np.ndarray  # (15,) divided second
    mean: np.ndarray  # (15,) imputation value for NaN pixels

    @classmethod
    def fit(cls, records: Sequence[Record], kind: str) -> "Normalizer":
        if kind not in ("z_score", "min_max"):
            raise ValueError("kind must be 'z_score' or 'min_max'")
        center = np.zeros(N_CHANNELS)
        scale = np.ones(N_CHANNELS)
        mean = np.zeros(N_CHANNELS)
        stacks = [np.stack([r.grids[c] for r in records]) for c in range(N_CHANNELS)]
        for c, values in enumerate(stacks):
            finite = values[np.isfinite(values)]
            if finite.size == 0:
                continue
            mean[c] = finite.mean()
            if kind == "z_score":
                center[c] = finite.mean()
                std = finite.std()
                scale[c] = std if std > 0 else 1.0
            else:
                lo, hi = finite.min(), finite.max()
                center[c] = lo
                scale[c] = (hi - lo) if hi > lo else 1.0
        return cls(kind=kind, center=center, scale=scale, mean=mean)

    def apply(self, record: Record) -> np.ndarray:
        """(16, 32, 32) float32: normalized channels + validity mask."""
        grids = record.grids.astype(np.float64)
        filled = np.where(np.isfinite(grids), grids, self.mean[:, None, None])
        normed = (filled - self.center[:, None, None]) / self.scale[:, None, None]
        out = np.concatenate([normed, record.valid[None].astype(np.float64)])
        return out.astype(np.float32)

    def denormalize(self, normed: np.ndarray) -> np.ndarray:
        """Inverse affine map on the 15 data channels."""
        return normed[:N_CHANNELS] * self.scale[:, None, None] + self.center[:, None, None]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
            "mean": self.mean.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(
            kind=d["kind"],
            center=np.asarray(d["center"]),
            scale=np.asarray(d["scale"]),
            mean=np.asarray(d["mean"]),
        )


def tensorize(records: Sequence[Record], normalizer: Normalizer) -> torch.Tensor:
    return torch.from_numpy(np.stack([normalizer.apply(r) for r in records]))


assert CHANNELS[13] == "plume_mask"  # ranking exports rely on registry order
