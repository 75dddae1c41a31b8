"""Infrared surveillance-frame colorization, target highlighting and recognition."""
from .color_transfer import TransferParams, colorize
from .colorspace import luminance, rgb_to_yuv, yuv_to_rgb
from .config import PipelineConfig, load_config
from .margin_classifier import MarginModel, predict, train
from .pipeline import recognize

__all__ = [
    "MarginModel",
    "PipelineConfig",
    "TransferParams",
    "colorize",
    "load_config",
    "luminance",
    "predict",
    "recognize",
    "rgb_to_yuv",
    "train",
    "yuv_to_rgb",
]
__version__ = "0.1.0"
