"""Target segmentation and per-target shape features.

Coordinates are ``(x, y)`` with ``x`` the column. Bounding boxes are
inclusive ``(min_x, min_y, max_x, max_y)``.
"""
import math
from dataclasses import dataclass, fields

import numpy as np
from scipy import ndimage

_SQUARE = np.ones((3, 3), dtype=bool)

FEATURE_NAMES = ("mass", "dist_mean", "dist_max", "dist_min", "diameter", "fractal_dim")


@dataclass(frozen=True)
class TargetRegion:
    """A set of target pixels; ``xs``/``ys`` are kept in row-major order."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        if len(self.xs) == 0 or len(self.xs) != len(self.ys):
            raise ValueError("a region needs a non-empty, matching set of coordinates")

    @classmethod
    def from_pixels(cls, pixels):
        """Build from an iterable of ``(x, y)``; duplicates are dropped."""
        pts = sorted({(int(x), int(y)) for x, y in pixels}, key=lambda p: (p[1], p[0]))
        arr = np.array(pts, dtype=np.int64).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def from_mask(cls, mask):
        ys, xs = np.nonzero(np.asarray(mask, dtype=bool))
        return cls(xs.astype(np.int64), ys.astype(np.int64))

    def __len__(self):
        return len(self.xs)

    @property
    def pixels(self):
        return set(zip(self.xs.tolist(), self.ys.tolist()))

    @property
    def centroid(self):
        return float(self.xs.mean()), float(self.ys.mean())

    @property
    def bbox(self):
        return (int(self.xs.min()), int(self.ys.min()), int(self.xs.max()), int(self.ys.max()))


@dataclass(frozen=True)
class FeatureVector:
    mass: float
    dist_mean: float
    dist_max: float
    dist_min: float
    diameter: float
    fractal_dim: float

    def as_array(self):
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=np.float64)

    @classmethod
    def from_array(cls, values):
        values = [float(v) for v in values]
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} feature values")
        return cls(*values)


def threshold_segment(luma, threshold):
    """Mask of pixels with luminance at or above ``threshold``."""
    luma = np.asarray(luma, dtype=np.float64)
    if luma.size == 0:
        raise ValueError("empty luminance plane")
    return luma >= threshold


def _erode(mask):
    return ndimage.binary_erosion(mask, structure=_SQUARE, border_value=0)


def _dilate(mask):
    return ndimage.binary_dilation(mask, structure=_SQUARE, border_value=0)


def opening(mask):
    return _dilate(_erode(np.asarray(mask, dtype=bool)))


def closing(mask):
    return _erode(_dilate(np.asarray(mask, dtype=bool)))


def morphological_filter(mask):
    """3x3 opening (drops specks) followed by 3x3 closing (fills pinholes).

    Pixels outside the frame count as background for both erosion and
    dilation.
    """
    return closing(opening(mask))


def connected_components(mask):
    """8-connected regions ordered by the top-left corner of their bbox."""
    mask = np.asarray(mask, dtype=bool)
    labels, count = ndimage.label(mask, structure=_SQUARE)
    if count == 0:
        return []
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    bounds = np.searchsorted(flat[order], np.arange(1, count + 2))
    width = mask.shape[1]
    regions = []
    for k in range(count):
        idx = order[bounds[k]:bounds[k + 1]]
        regions.append(TargetRegion(idx % width, idx // width))
    regions.sort(key=lambda r: (r.bbox[1], r.bbox[0], int(r.ys[0]) * width + int(r.xs[0])))
    return regions


def box_counts(region):
    """Occupied 1x1 and 2x2 boxes, the 2x2 grid anchored at the bbox origin."""
    x0, y0, _, _ = region.bbox
    n1 = len(region)
    cells = np.unique(((region.xs - x0) // 2) * (1 << 32) + (region.ys - y0) // 2)
    return n1, len(cells)


def fractal_dimension(region):
    """Two-scale box-counting dimension ``log2(N1 / N2)``, in [0, 2]."""
    n1, n2 = box_counts(region)
    if n1 == n2:
        return 0.0
    # log2 of the ratio is exact when N1 = 4 N2, keeping the value <= 2.
    return math.log2(n1 / n2)


def extract_features(region, meters_per_pixel=1.0):
    """The six shape features of a target region.

    Distances are from each pixel center to the centroid; the diameter is the
    diagonal of the inclusive bounding rectangle. Lengths are multiplied by
    ``meters_per_pixel``.
    """
    x0, y0, x1, y1 = region.bbox
    # Work relative to the bbox origin so translated regions give identical floats.
    rx = (region.xs - x0).astype(np.float64)
    ry = (region.ys - y0).astype(np.float64)
    d = np.hypot(rx - rx.mean(), ry - ry.mean())
    mean = min(max(float(d.mean()), float(d.min())), float(d.max()))
    diameter = math.hypot(x1 - x0 + 1, y1 - y0 + 1)
    s = float(meters_per_pixel)
    return FeatureVector(
        mass=float(len(region)),
        dist_mean=mean * s,
        dist_max=float(d.max()) * s,
        dist_min=float(d.min()) * s,
        diameter=diameter * s,
        fractal_dim=fractal_dimension(region),
    )
