"""Synthetic infrared-like scenes with exact ground truth.

Scenes are grayscale frames with bright blobs of two or more target classes
over a smooth background, degraded by one of four environment profiles:

``night``
    Contrast compressed toward the background mean, multiplicative gain noise.
``snowy``
    Bright speckles added to a random fraction of pixels.
``shelter``
    Thin dark horizontal or vertical bars drawn across the frame, occluding
    whatever lies beneath.
``rainy``
    Short bright diagonal streaks.

A color template is rendered from a clean scene: background in a cool tint,
hot blobs in warm tones. Everything is drawn from one seeded generator, so a
spec and seed give a byte-identical corpus.
"""
import json
import os
from dataclasses import asdict, dataclass, field, replace
from importlib import resources

import numpy as np

from .colorspace import round_half_up
from .color_transfer import fit_chroma_to_gamut
from .colorspace import yuv_to_rgb
from .evaluation import ENVIRONMENTS
from .manifest import Manifest, ManifestEntry, SPLITS, Target, write_manifest
from .netpbm import write_image

DEFAULT_PROFILES = {
    "night": {"contrast": 0.8, "gain_sigma": 0.02},
    "snowy": {"speckle_fraction": 0.02, "speckle_boost": [30, 80]},
    "shelter": {"bars": [2, 4], "bar_width": [1, 2]},
    "rainy": {"streaks": [15, 30], "streak_length": [5, 12], "streak_boost": [20, 60]},
}


@dataclass(frozen=True)
class BlobClass:
    name: str
    shape: str = "ellipse"
    count: tuple = (1, 2)
    intensity: tuple = (225, 245)
    width: tuple = (6, 9)
    height: tuple = (14, 20)

    def __post_init__(self):
        if self.shape not in ("ellipse", "rectangle"):
            raise ValueError(f"unknown blob shape {self.shape!r}")
        for name in ("count", "intensity", "width", "height"):
            lo, hi = getattr(self, name)
            if lo > hi or lo < 0:
                raise ValueError(f"{self.name}: bad {name} range {(lo, hi)}")


@dataclass(frozen=True)
class SyntheticSceneSpec:
    width: int = 80
    height: int = 80
    classes: tuple = (
        BlobClass("personnel", "ellipse", (1, 2), (225, 245), (6, 9), (14, 20)),
        BlobClass("equipment", "rectangle", (1, 2), (225, 245), (13, 18), (10, 14)),
    )
    background: tuple = (40, 110)
    sensor_noise: float = 2.0
    environments: tuple = ENVIRONMENTS
    training_per_environment: int = 10
    test_per_environment: int = 10
    template_width: int = 64
    template_height: int = 64
    border: int = 3
    min_gap: int = 4
    profiles: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_PROFILES)))
    seed: int = 0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be positive")
        unknown = set(self.environments) - set(ENVIRONMENTS)
        if unknown:
            raise ValueError(f"unknown environments {sorted(unknown)}")

    def to_dict(self):
        d = asdict(self)
        d["classes"] = [asdict(c) for c in self.classes]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "classes" in d:
            d["classes"] = tuple(
                BlobClass(**{k: tuple(v) if isinstance(v, list) else v for k, v in c.items()})
                for c in d["classes"])
        for key in ("background", "environments"):
            if key in d:
                d[key] = tuple(d[key])
        if "profiles" in d:
            merged = json.loads(json.dumps(DEFAULT_PROFILES))
            for env, knobs in d["profiles"].items():
                merged.setdefault(env, {}).update(knobs)
            d["profiles"] = merged
        return cls(**d)


def load_spec(path=None):
    """Read a spec from JSON; ``None`` loads the bundled benchmark spec."""
    if path is None:
        text = resources.files("irtarget").joinpath("data/benchmark.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return SyntheticSceneSpec.from_dict(json.loads(text))


def _uniform_int(rng, bounds):
    lo, hi = bounds
    return int(rng.integers(lo, hi + 1))


def _background(rng, h, w, lo, hi):
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    field_ = np.zeros((h, w))
    for _ in range(3):
        fx, fy = rng.uniform(0.5, 2.0, size=2) * np.pi / max(h, w)
        phase = rng.uniform(0, 2 * np.pi)
        field_ += np.sin(fx * xx + fy * yy + phase)
    field_ = (field_ - field_.min()) / max(np.ptp(field_), 1e-12)
    return lo + (hi - lo) * field_


def _blob_mask(shape, h, w, x0, y0, bw, bh):
    mask = np.zeros((h, w), dtype=bool)
    if shape == "rectangle":
        mask[y0:y0 + bh, x0:x0 + bw] = True
        return mask
    yy, xx = np.mgrid[0:h, 0:w]
    cx, cy = x0 + (bw - 1) / 2.0, y0 + (bh - 1) / 2.0
    mask |= ((xx - cx) / (bw / 2.0)) ** 2 + ((yy - cy) / (bh / 2.0)) ** 2 <= 1.0
    return mask


def _place(rng, spec, h, w, bw, bh, boxes):
    g, b = spec.min_gap, spec.border
    if w - b - bw < b or h - b - bh < b:
        return None
    for _ in range(100):
        x0 = int(rng.integers(b, w - b - bw + 1))
        y0 = int(rng.integers(b, h - b - bh + 1))
        box = (x0, y0, x0 + bw - 1, y0 + bh - 1)
        if all(box[0] > o[2] + g or box[2] < o[0] - g or box[1] > o[3] + g or box[3] < o[1] - g
               for o in boxes):
            return box
    return None


def render_clean(rng, spec, h, w):
    """Background plus blobs; returns (float image, targets, hot mask)."""
    img = _background(rng, h, w, *spec.background)
    hot = np.zeros((h, w), dtype=bool)
    targets, boxes = [], []
    for cls in spec.classes:
        for _ in range(_uniform_int(rng, cls.count)):
            bw, bh = _uniform_int(rng, cls.width), _uniform_int(rng, cls.height)
            value = rng.uniform(*cls.intensity)
            box = _place(rng, spec, h, w, bw, bh, boxes)
            if box is None:
                continue
            boxes.append(box)
            mask = _blob_mask(cls.shape, h, w, box[0], box[1], bw, bh)
            img[mask] = value
            hot |= mask
            ys, xs = np.nonzero(mask)
            targets.append(Target((int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())),
                                  cls.name))
    return img, targets, hot


def degrade(rng, img, environment, profile):
    """Apply one environment profile to a float image (in place) and return it."""
    h, w = img.shape
    if environment == "night":
        mean = img.mean()
        img[:] = mean + profile["contrast"] * (img - mean)
        img *= 1.0 + rng.normal(0.0, profile["gain_sigma"], size=img.shape)
    elif environment == "snowy":
        flakes = rng.random(img.shape) < profile["speckle_fraction"]
        img[flakes] += rng.uniform(*profile["speckle_boost"], size=int(flakes.sum()))
    elif environment == "shelter":
        low = float(np.percentile(img, 5))
        for _ in range(_uniform_int(rng, profile["bars"])):
            bw = _uniform_int(rng, profile["bar_width"])
            if rng.random() < 0.5:
                x = int(rng.integers(0, w - bw + 1))
                img[:, x:x + bw] = low
            else:
                y = int(rng.integers(0, h - bw + 1))
                img[y:y + bw, :] = low
    elif environment == "rainy":
        for _ in range(_uniform_int(rng, profile["streaks"])):
            length = _uniform_int(rng, profile["streak_length"])
            x, y = int(rng.integers(0, w)), int(rng.integers(0, h))
            boost = rng.uniform(*profile["streak_boost"])
            for t in range(length):
                if 0 <= y + t < h and 0 <= x + t // 2 < w:
                    img[y + t, x + t // 2] += boost
    else:
        raise ValueError(f"unknown environment {environment!r}")
    return img


def _to_uint8(img):
    return round_half_up(np.clip(img, 0, 255)).astype(np.uint8)


def render_scene(rng, spec, environment):
    img, targets, _ = render_clean(rng, spec, spec.height, spec.width)
    degrade(rng, img, environment, spec.profiles[environment])
    img += rng.normal(0.0, spec.sensor_noise, size=img.shape)
    return _to_uint8(img), targets


def render_template(rng, spec):
    """Color template: cool background, warm hot blobs."""
    h, w = spec.template_height, spec.template_width
    img, _, hot = render_clean(rng, spec, h, w)
    y = round_half_up(np.clip(img, 0, 255)).ravel()
    uv = np.where(hot.ravel()[:, None], [-35.0, 45.0], [25.0, -12.0])
    uv = uv + rng.normal(0.0, 3.0, size=uv.shape)
    uv = fit_chroma_to_gamut(y, uv)
    return yuv_to_rgb(np.concatenate([y[:, None], uv], axis=1).reshape(h, w, 3))


def generate_synthetic(spec, output_dir):
    """Write ``template.ppm``, ``images/*.pgm``, ``manifest.jsonl`` and ``spec.json``."""
    os.makedirs(os.path.join(output_dir, "images"), exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    write_image(os.path.join(output_dir, "template.ppm"), render_template(rng, spec))
    entries = []
    per_split = {"training": spec.training_per_environment, "test": spec.test_per_environment}
    for split in SPLITS:
        for env in spec.environments:
            for k in range(per_split[split]):
                image_id = f"{split}-{env}-{k:03d}"
                img, targets = render_scene(rng, spec, env)
                rel = f"images/{image_id}.pgm"
                write_image(os.path.join(output_dir, rel), img)
                entries.append(ManifestEntry(image_id, rel, env, split, tuple(targets),
                                             "template.ppm"))
    manifest = Manifest(entries, os.path.abspath(output_dir))
    write_manifest(manifest, os.path.join(output_dir, "manifest.jsonl"))
    with open(os.path.join(output_dir, "spec.json"), "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def with_seed(spec, seed):
    return replace(spec, seed=int(seed))
