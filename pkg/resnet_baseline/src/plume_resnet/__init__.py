"""Image-based plume/artifact baseline: patch ResNets + expected-gradients explanations."""

from .aggregate import channel_summary
from .gradshap import ChannelAttribution, expected_gradients, gradient_shap
from .inputs import Normalizer, tensorize
from .net import NetConfig, PatchResNet, build_net
from .packio import CHANNELS, Record, class_labels, read_pack
from .train import TrainResult, load_checkpoint, save_checkpoint, train_from_pack, train_net

__version__ = "0.1.0"

__all__ = [
    "CHANNELS",
    "ChannelAttribution",
    "NetConfig",
    "Normalizer",
    "PatchResNet",
    "Record",
    "TrainResult",
    "build_net",
    "channel_summary",
    "class_labels",
    "expected_gradients",
    "gradient_shap",
    "load_checkpoint",
    "read_pack",
    "save_checkpoint",
    "tensorize",
    "train_from_pack",
    "train_net",
]
