"""Flat ``key = value`` pipeline configuration.

Every key has a default, so an empty file (or no file) is a valid config.
``#`` and ``;`` start comment lines.
"""
import configparser
from dataclasses import dataclass, field, fields, replace

from .color_transfer import TransferParams
from .evaluation import DEFAULT_IOU
from .pseudocolor import Palette


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    e: int = 2
    neighbors: int = 10
    template_stride: int = 2
    transfer_regularization: float = 1e-6
    gamut_fit: bool = True
    palette: Palette = field(default_factory=Palette)
    threshold_mode: str = "eq6"
    threshold: float = 0.0
    min_contrast: float = 0.0
    svm_c: float = 1.0
    svm_tolerance: float = 1e-6
    svm_max_iterations: int = 10_000
    seed: int = 0
    iou_threshold: float = DEFAULT_IOU
    meters_per_pixel: float = 1.0
    workers: int = 1

    def __post_init__(self):
        self.transfer_params  # validates e, neighbors, stride, regularization
        if self.threshold_mode not in ("eq6", "fixed"):
            raise ConfigError("threshold_mode must be 'eq6' or 'fixed'")
        if self.min_contrast < 0:
            raise ConfigError("min_contrast must be >= 0")
        if not self.svm_c > 0 or not self.svm_tolerance > 0:
            raise ConfigError("svm_c and svm_tolerance must be > 0")
        if self.svm_max_iterations < 1:
            raise ConfigError("svm_max_iterations must be >= 1")
        if not 0 < self.iou_threshold <= 1:
            raise ConfigError("iou_threshold must be in (0, 1]")
        if not self.meters_per_pixel > 0:
            raise ConfigError("meters_per_pixel must be > 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def transfer_params(self):
        try:
            return TransferParams(self.e, self.neighbors, self.template_stride,
                                  self.transfer_regularization, self.gamut_fit)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _converters():
    out = {}
    for f in fields(PipelineConfig):
        if f.name == "palette":
            out[f.name] = Palette.from_hex
        elif f.type in (bool, "bool"):
            out[f.name] = _parse_bool
        elif f.type in (int, "int"):
            out[f.name] = int
        elif f.type in (float, "float"):
            out[f.name] = float
        else:
            out[f.name] = str.strip
    return out


def parse_config(text, base=None):
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[pipeline]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    conv = _converters()
    values = {}
    for key, raw in parser["pipeline"].items():
        if key not in conv:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = conv[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    try:
        return replace(base or PipelineConfig(), **values)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, **overrides):
    if path is None:
        cfg = PipelineConfig()
    else:
        with open(path, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides) if overrides else cfg


def dump_config(cfg):
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, Palette):
            v = v.to_hex()
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
