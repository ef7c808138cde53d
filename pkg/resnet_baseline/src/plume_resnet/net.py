"""Residual networks adapted to 15-channel 32x32 scene patches.

The ImageNet-lineage stem would collapse a 32x32 input, so the stem here
is a single 3x3 stride-1 convolution with no initial pooling; everything
downstream follows the standard basic-block layout (2,2,2,2 for depth 18,
3,4,6,3 for depth 34). Inputs carry 16 channels: the 15 data channels
plus the validity mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

BLOCK_COUNTS = {18: (2, 2, 2, 2), 34: (3, 4, 6, 3)}
ACTIVATIONS = {"relu": nn.ReLU, "swish": nn.SiLU}
IN_CHANNELS = 16  # 15 data channels + validity mask
STAGE_WIDTHS = (64, 128, 256, 512)


@dataclass(frozen=True)
class NetConfig:
    depth: int = 18
    scaling: str = "z_score"
    activation: str = "swish"
    learning_rate: float = 1e-3
    batch_size: int | None = None  # best-found: 32 for depth 18, 16 for depth 34
    epochs: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.depth not in BLOCK_COUNTS:
            raise ValueError("depth must be 18 or 34")
        if self.scaling not in ("min_max", "z_score"):
            raise ValueError("scaling must be 'min_max' or 'z_score'")
        if self.activation not in ACTIVATIONS:
            raise ValueError("activation must be 'relu' or 'swish'")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")

    @property
    def effective_batch_size(self) -> int:
        if self.batch_size is not None:
            return self.batch_size
        return 32 if self.depth == 18 else 16


class BasicBlock(nn.Module):
    def __init__(self, c_in: int, c_out: int, stride: int, act: type[nn.Module]):
        super().__init__()
        self.conv1 = nn.Conv2d(c_in, c_out, 3, stride, 1, bias=False)
        self.bn1 = nn.BatchNorm2d(c_out)
        self.conv2 = nn.Conv2d(c_out, c_out, 3, 1, 1, bias=False)
        self.bn2 = nn.BatchNorm2d(c_out)
        self.act = act()
        self.downsample = None
        if stride != 1 or c_in != c_out:
            self.downsample = nn.Sequential(
                nn.Conv2d(c_in, c_out, 1, stride, bias=False), nn.BatchNorm2d(c_out)
            )

    def forward(self, x):
        identity = x if self.downsample is None else self.downsample(x)
        out = self.act(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return self.act(out + identity)


class PatchResNet(nn.Module):
    def __init__(self, depth: int = 18, activation: str = "swish",
                 in_channels: int = IN_CHANNELS, n_classes: int = 2):
        super().__init__()
        act = ACTIVATIONS[activation]
        self.depth = depth
        self.stem = nn.Sequential(
            nn.Conv2d(in_channels, STAGE_WIDTHS[0], 3, 1, 1, bias=False),
            nn.BatchNorm2d(STAGE_WIDTHS[0]),
            act(),
        )
        stages = []
        c_in = STAGE_WIDTHS[0]
        for i, n_blocks in enumerate(BLOCK_COUNTS[depth]):
            c_out = STAGE_WIDTHS[i]
            for j in range(n_blocks):
                stride = 2 if (i > 0 and j == 0) else 1
                stages.append(BasicBlock(c_in, c_out, stride, act))
                c_in = c_out
        self.stages = nn.Sequential(*stages)
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.head = nn.Linear(STAGE_WIDTHS[-1], n_classes)

    def forward(self, x):
        out = self.stages(self.stem(x))
        return self.head(torch.flatten(self.pool(out), 1))

    def margin(self, x):
        """Binary decision value: logit(plume) - logit(artifact)."""
        logits = self.forward(x)
        return logits[:, 1] - logits[:, 0]

    def block_counts(self) -> tuple[int, ...]:
        counts = [0, 0, 0, 0]
        for module in self.stages:
            width = module.conv1.out_channels
            counts[STAGE_WIDTHS.index(width)] += 1
        return tuple(counts)


def build_net(cfg: NetConfig) -> PatchResNet:
    torch.manual_seed(cfg.seed)
    return PatchResNet(depth=cfg.depth, activation=cfg.activation)
