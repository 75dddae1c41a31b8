"""End-to-end recognition: colorize, pseudo-color, segment, describe, classify."""
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import margin_classifier as mc
from .color_transfer import build_template_index, colorize
from .colorspace import check_rgb, luminance_plane
from .config import PipelineConfig
from .evaluation import evaluate_dataset, match_detections
from .manifest import ManifestError
from .netpbm import read_pgm, read_ppm
from .pseudocolor import coding_range, pseudo_color_encode
from .target_detect import (
    connected_components,
    extract_features,
    morphological_filter,
    threshold_segment,
)

log = logging.getLogger(__name__)

# Outline colors per class index; cycles when there are more classes.
BOX_COLORS = ((0, 255, 0), (0, 255, 255), (255, 0, 255), (255, 255, 255))


@dataclass
class Detection:
    bbox: tuple
    features: object
    label: str = None
    scores: list = field(default_factory=list)

    def to_record(self, image_id=None):
        rec = {}
        if image_id is not None:
            rec["image"] = image_id
        rec["class"] = self.label
        rec["bbox"] = list(self.bbox)
        rec["scores"] = {str(c): g for c, g in self.scores}
        rec["features"] = self.features.as_array().tolist()
        return rec


@dataclass
class Recognition:
    colorized: np.ndarray
    encoded: np.ndarray
    luma: np.ndarray
    mask: np.ndarray
    detections: list


def segment(rgb, cfg=PipelineConfig()):
    """Luminance, coding range and filtered target mask of a color frame."""
    rgb = check_rgb(rgb)
    luma = luminance_plane(rgb)
    rng = coding_range(luma)
    if rng.t_max - rng.t_min <= cfg.min_contrast:
        # No thermal contrast: nothing stands out.
        mask = np.zeros(luma.shape, dtype=bool)
    else:
        threshold = rng.t_h if cfg.threshold_mode == "eq6" else cfg.threshold
        mask = morphological_filter(threshold_segment(luma, threshold))
    return luma, rng, mask


def detect(rgb, cfg=PipelineConfig()):
    """Targets of an already colorized frame (unclassified)."""
    luma, rng, mask = segment(rgb, cfg)
    regions = connected_components(mask)
    dets = [Detection(r.bbox, extract_features(r, cfg.meters_per_pixel)) for r in regions]
    return luma, rng, mask, dets


def classify(model, detections):
    for d in detections:
        d.scores = mc.decision(model, d.features)
        d.label = mc.predict(model, d.features)
    return detections


def draw_boxes(img, detections, classes=()):
    """Copy of ``img`` with a one-pixel outline around every detection bbox."""
    out = check_rgb(img).copy()
    for d in detections:
        k = list(classes).index(d.label) if d.label in classes else 0
        color = BOX_COLORS[k % len(BOX_COLORS)]
        x0, y0, x1, y1 = d.bbox
        out[y0, x0:x1 + 1] = color
        out[y1, x0:x1 + 1] = color
        out[y0:y1 + 1, x0] = color
        out[y0:y1 + 1, x1] = color
    return out


def recognize(gray, template, model=None, cfg=PipelineConfig(), index=None):
    """Run the full chain on one grayscale frame.

    ``template`` may be ``None`` when a prebuilt ``index`` is given. Without a
    model the detections are returned unclassified.
    """
    params = cfg.transfer_params
    colorized = colorize(gray, template, params, workers=cfg.workers, index=index)
    luma, rng, mask, dets = detect(colorized, cfg)
    encoded = pseudo_color_encode(colorized, luma, rng, cfg.palette)
    if model is not None:
        if model.n_features != 6:
            raise mc.ModelFormatError(
                f"model expects {model.n_features} features, pipeline produces 6")
        classify(model, dets)
    return Recognition(colorized, encoded, luma, mask, dets)


def annotate(result, model=None):
    classes = model.classes if model is not None else ()
    return draw_boxes(result.encoded, result.detections, classes)


def detections_jsonl(records):
    return "".join(json.dumps(r) + "\n" for r in records)


class TemplateCache:
    """Template indexes keyed by file path, built on first use."""

    def __init__(self, cfg):
        self.params = cfg.transfer_params
        self._cache = {}

    def get(self, path):
        if path not in self._cache:
            self._cache[path] = build_template_index(read_ppm(path), self.params)
        return self._cache[path]


def _run_entry(manifest, entry, cache, cfg, model=None, default_template=None):
    template_path = manifest.path(entry.template) if entry.template else default_template
    if template_path is None:
        raise ManifestError(f"{entry.image_id}: no template given")
    gray = read_pgm(manifest.path(entry.image))
    h, w = gray.shape
    for t in entry.targets:
        x0, y0, x1, y1 = t.bbox
        if x1 >= w or y1 >= h:
            raise ManifestError(f"{entry.image_id}: target bbox {t.bbox} outside {w}x{h} image")
    return recognize(gray, None, model, cfg, index=cache.get(template_path))


def training_samples(manifest, cfg=PipelineConfig(), template=None):
    """Labeled feature vectors from the training split.

    Each image is run through the detection chain; detections that match a
    ground-truth target take its class, unmatched detections are dropped.
    """
    cache = TemplateCache(cfg)
    samples = []
    for entry in manifest.split("training"):
        result = _run_entry(manifest, entry, cache, cfg, default_template=template)
        truth = [(t.bbox, t.label) for t in entry.targets]
        preds = [(d.bbox, None) for d in result.detections]
        for ti, pi, _ in match_detections(preds, truth, cfg.iou_threshold):
            samples.append(mc.LabeledSample(result.detections[pi].features, truth[ti][1]))
        log.debug("%s: %d detections, %d targets", entry.image_id,
                  len(result.detections), len(truth))
    return samples


def train_from_manifest(manifest, cfg=PipelineConfig(), template=None):
    samples = training_samples(manifest, cfg, template)
    return mc.train(samples, C=cfg.svm_c, tol=cfg.svm_tolerance,
                    max_iterations=cfg.svm_max_iterations, seed=cfg.seed)


def predict_manifest(manifest, model, cfg=PipelineConfig(), split="test", template=None):
    """Detections for every entry of ``split``: image id -> list of Detection."""
    cache = TemplateCache(cfg)
    out = {}
    for entry in manifest.split(split):
        result = _run_entry(manifest, entry, cache, cfg, model, template)
        out[entry.image_id] = result.detections
    return out


def evaluate_manifest(manifest, model, cfg=PipelineConfig(), split="test", template=None):
    detections = predict_manifest(manifest, model, cfg, split, template)
    entries = manifest.split(split)
    preds = {k: [(d.bbox, d.label) for d in v] for k, v in detections.items()}
    return evaluate_dataset(entries, preds, cfg.iou_threshold), detections
