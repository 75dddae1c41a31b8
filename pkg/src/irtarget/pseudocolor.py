"""Pseudo-color coding of the hottest luminance band."""
from dataclasses import dataclass

import numpy as np

from .colorspace import check_rgb, round_half_up


@dataclass(frozen=True)
class CodingRange:
    t_h: float
    t_max: float
    t_min: float

    def __post_init__(self):
        if not self.t_min <= self.t_h <= self.t_max:
            raise ValueError(f"inconsistent coding range {self}")

    @property
    def degenerate(self):
        return self.t_max == self.t_h


@dataclass(frozen=True)
class Palette:
    """Linear color ramp through two or more RGB stops."""

    stops: tuple = ((255, 255, 0), (255, 0, 0))

    def __post_init__(self):
        stops = tuple(tuple(int(c) for c in s) for s in self.stops)
        if len(stops) < 2:
            raise ValueError("palette needs at least two stops")
        for s in stops:
            if len(s) != 3 or not all(0 <= c <= 255 for c in s):
                raise ValueError(f"invalid palette stop {s}")
        object.__setattr__(self, "stops", stops)

    @classmethod
    def from_hex(cls, spec):
        """Parse ``"#ffff00,#ff0000"`` style stop lists."""
        stops = []
        for token in spec.split(","):
            token = token.strip().lstrip("#")
            if len(token) != 6:
                raise ValueError(f"bad hex color {token!r}")
            stops.append(tuple(int(token[i:i + 2], 16) for i in (0, 2, 4)))
        return cls(tuple(stops))

    def to_hex(self):
        return ",".join("#%02x%02x%02x" % s for s in self.stops)

    def sample(self, position):
        """Interpolated (unrounded) colors at ramp positions in [0, 1]."""
        pos = np.clip(np.asarray(position, dtype=np.float64), 0.0, 1.0)
        stops = np.asarray(self.stops, dtype=np.float64)
        seg = len(stops) - 1
        scaled = pos * seg
        i = np.minimum(np.floor(scaled).astype(int), seg - 1)
        frac = (scaled - i)[..., None]
        return stops[i] + frac * (stops[i + 1] - stops[i])


def coding_range(luma):
    """Band ``[t_H, t_max]`` with ``t_H = 0.80 t_max + 0.20 t_min``."""
    luma = np.asarray(luma, dtype=np.float64)
    if luma.size == 0:
        raise ValueError("empty luminance plane")
    t_max = float(luma.max())
    t_min = float(luma.min())
    if t_max == t_min:
        # 0.8c + 0.2c can round one ulp above c.
        return CodingRange(t_max, t_max, t_min)
    t_h = 0.80 * t_max + 0.20 * t_min
    return CodingRange(min(t_h, t_max), t_max, t_min)


def ramp_position(luma, rng):
    luma = np.asarray(luma, dtype=np.float64)
    if rng.degenerate:
        return np.ones_like(luma)
    return (luma - rng.t_h) / (rng.t_max - rng.t_h)


def pseudo_color_encode(img, luma, rng, palette=Palette()):
    """Replace pixels whose luminance falls in the coding band with palette colors.

    Pixels below ``t_H`` are returned untouched.
    """
    img = check_rgb(img)
    luma = np.asarray(luma, dtype=np.float64)
    if luma.shape != img.shape[:2]:
        raise ValueError("image and luminance plane differ in size")
    band = (luma >= rng.t_h) & (luma <= rng.t_max)
    out = img.copy()
    colors = palette.sample(ramp_position(luma[band], rng))
    out[band] = round_half_up(colors).astype(np.uint8)
    return out
