"""Training loop and checkpointing for the patch ResNets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from .inputs import Normalizer, tensorize
from .net import NetConfig, PatchResNet, build_net
from .packio import Record, class_labels, read_pack


class TrainingAborted(RuntimeError):
    """Loss became non-finite or the data is degenerate."""


@dataclass
class TrainResult:
    net: PatchResNet
    normalizer: Normalizer
    config: NetConfig
    history: list[dict]  # per-epoch {"epoch", "loss", "accuracy"}

    @property
    def epochs_to_perfect(self) -> int | None:
        for entry in self.history:
            if entry["accuracy"] == 1.0:
                return entry["epoch"]
        return None


def train_net(
    records: list[Record],
    cfg: NetConfig,
    stop_at_perfect: bool = False,
) -> TrainResult:
    """Train on the given records; normalization comes from them alone."""
    y = class_labels(records)
    if len(np.unique(y)) < 2:
        raise TrainingAborted("training pack contains a single class")
    normalizer = Normalizer.fit(records, cfg.scaling)
    X = tensorize(records, normalizer)
    labels = torch.from_numpy(y)

    torch.manual_seed(cfg.seed)
    net = build_net(cfg)
    net.train()
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    loss_fn = nn.CrossEntropyLoss()
    shuffler = torch.Generator().manual_seed(cfg.seed)
    batch = cfg.effective_batch_size

    history: list[dict] = []
    for epoch in range(1, cfg.epochs + 1):
        order = torch.randperm(len(records), generator=shuffler)
        total_loss = 0.0
        for start in range(0, len(records), batch):
            idx = order[start : start + batch]
            optimizer.zero_grad()
            loss = loss_fn(net(X[idx]), labels[idx])
            if not torch.isfinite(loss):
                raise TrainingAborted(f"non-finite loss at epoch {epoch}")
            loss.backward()
            optimizer.step()
            total_loss += float(loss.detach()) * idx.numel()
        net.eval()
        with torch.no_grad():
            acc = float((net(X).argmax(dim=1) == labels).float().mean())
        net.train()
        history.append({"epoch": epoch, "loss": total_loss / len(records), "accuracy": acc})
        if stop_at_perfect and acc == 1.0:
            break
    net.eval()
    return TrainResult(net=net, normalizer=normalizer, config=cfg, history=history)


def train_from_pack(pack_path, cfg: NetConfig, stop_at_perfect: bool = False) -> TrainResult:
    return train_net(read_pack(pack_path), cfg, stop_at_perfect=stop_at_perfect)


def save_checkpoint(result: TrainResult, path) -> None:
    torch.save(
        {
            "format": "plume-resnet-checkpoint",
            "version": 1,
            "state_dict": result.net.state_dict(),
            "config": result.config.__dict__,
            "normalizer": result.normalizer.to_dict(),
            "history": result.history,
        },
        path,
    )


def load_checkpoint(path) -> TrainResult:
    blob = torch.load(path, weights_only=False)
    if blob.get("format") != "plume-resnet-checkpoint":
        raise ValueError("not a checkpoint file")
    cfg = NetConfig(**blob["config"])
    net = build_net(cfg)
    net.load_state_dict(blob["state_dict"])
    net.eval()
    return TrainResult(
        net=net,
        normalizer=Normalizer.from_dict(blob["normalizer"]),
        config=cfg,
        history=blob["history"],
    )
