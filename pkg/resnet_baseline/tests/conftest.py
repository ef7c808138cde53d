import subprocess
import sys

import pytest
import torch

from plume_resnet import NetConfig, read_pack, tensorize, train_net


def generate_pack(path, *, seed, n, mode="mixed", plume_fraction=0.5):
    """Obtain input data through the screening toolkit's CLI (file interface)."""
    cmd = [
        sys.executable, "-m", "plumescreen.cli", "generate",
        "--seed", str(seed), "--n", str(n), "--mode", mode,
        "--plume-fraction", str(plume_fraction),
        "--out", str(path), "--out-dir", str(path.parent),
    ]
    subprocess.run(cmd, check=True, capture_output=True)
    return path


@pytest.fixture(scope="session")
def mixed_pack(tmp_path_factory):
    root = tmp_path_factory.mktemp("packs")
    return read_pack(generate_pack(root / "mixed.spk", seed=31, n=24))


@pytest.fixture(scope="session")
def scoreonly_pack(tmp_path_factory):
    root = tmp_path_factory.mktemp("packs-scoreonly")
    return read_pack(
        generate_pack(root / "scoreonly.spk", seed=5, n=64, mode="score-only")
    )


@pytest.fixture(scope="session")
def overfit_run(scoreonly_pack):
    """ResNet-18 trained to memorize the 64-sample score-only batch.

    Shared by the overfit, completeness, determinism and ranking tests;
    training stops as soon as training accuracy reaches 100%.
    """
    cfg = NetConfig(depth=18, seed=3, epochs=200)
    result = train_net(scoreonly_pack, cfg, stop_at_perfect=True)
    X = tensorize(scoreonly_pack, result.normalizer)
    return result, X


@pytest.fixture(scope="session")
def torch_threads():
    return torch.get_num_threads()
