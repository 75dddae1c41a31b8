import math
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from irtarget.target_detect import (
    TargetRegion,
    closing,
    connected_components,
    extract_features,
    fractal_dimension,
    morphological_filter,
    opening,
    threshold_segment,
)

masks = arrays(np.bool_, st.tuples(st.integers(1, 14), st.integers(1, 14)))


# ---- brute-force oracles ------------------------------------------------

def erode_ref(m):
    h, w = m.shape
    out = np.zeros_like(m)
    for y in range(h):
        for x in range(w):
            out[y, x] = all(0 <= y + dy < h and 0 <= x + dx < w and m[y + dy, x + dx]
                            for dy in (-1, 0, 1) for dx in (-1, 0, 1))
    return out


def dilate_ref(m):
    h, w = m.shape
    out = np.zeros_like(m)
    for y in range(h):
        for x in range(w):
            out[y, x] = any(0 <= y + dy < h and 0 <= x + dx < w and m[y + dy, x + dx]
                            for dy in (-1, 0, 1) for dx in (-1, 0, 1))
    return out


def filter_ref(m):
    opened = dilate_ref(erode_ref(m))
    return erode_ref(dilate_ref(opened))


def flood_components(m):
    h, w = m.shape
    seen = np.zeros_like(m)
    comps = []
    for y in range(h):
        for x in range(w):
            if m[y, x] and not seen[y, x]:
                comp, queue = set(), deque([(x, y)])
                seen[y, x] = True
                while queue:
                    cx, cy = queue.popleft()
                    comp.add((cx, cy))
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            nx, ny = cx + dx, cy + dy
                            if 0 <= nx < w and 0 <= ny < h and m[ny, nx] and not seen[ny, nx]:
                                seen[ny, nx] = True
                                queue.append((nx, ny))
                comps.append(comp)
    return comps


def box_cover_ref(pixels):
    """Count 1x1 and 2x2 boxes that hold a bright pixel by scanning the grid."""
    xs = [p[0] for p in pixels]
    ys = [p[1] for p in pixels]
    x0, y0 = min(xs), min(ys)
    n2 = 0
    for gy in range(y0, max(ys) + 1, 2):
        for gx in range(x0, max(xs) + 1, 2):
            if any((gx + dx, gy + dy) in pixels for dx in (0, 1) for dy in (0, 1)):
                n2 += 1
    return len(pixels), n2


# ---- segmentation --------------------------------------------------------

def test_threshold_above_constant():
    assert not threshold_segment(np.full((3, 4), 100.0), 150).any()


def test_threshold_inclusive():
    assert threshold_segment(np.full((3, 4), 100.0), 100).all()


def test_threshold_on_ramp():
    ramp = np.arange(256, dtype=float).reshape(16, 16)
    mask = threshold_segment(ramp, 204)
    expected = np.array([[v >= 204 for v in row] for row in ramp.tolist()])
    np.testing.assert_array_equal(mask, expected)


@given(arrays(np.uint8, (6, 6)), st.integers(0, 255), st.integers(0, 255))
def test_raising_threshold_never_adds_pixels(plane, a, b):
    lo, hi = sorted((a, b))
    assert not np.any(threshold_segment(plane, hi) & ~threshold_segment(plane, lo))


# ---- morphology ----------------------------------------------------------

def test_isolated_pixel_removed():
    m = np.zeros((7, 7), bool)
    m[3, 3] = True
    assert not morphological_filter(m).any()


def test_solid_block_unchanged():
    m = np.zeros((11, 11), bool)
    m[3:8, 3:8] = True
    np.testing.assert_array_equal(morphological_filter(m), m)
    np.testing.assert_array_equal(filter_ref(m), m)


def test_empty_mask_stays_empty():
    assert not morphological_filter(np.zeros((5, 5), bool)).any()


def test_pinhole_filled():
    m = np.zeros((11, 11), bool)
    m[2:9, 2:9] = True
    m[5, 5] = False
    assert morphological_filter(m)[5, 5]


@settings(max_examples=60, deadline=None)
@given(masks)
def test_filter_matches_brute_force(m):
    np.testing.assert_array_equal(morphological_filter(m), filter_ref(m))


@settings(max_examples=60, deadline=None)
@given(masks)
def test_opening_idempotent(m):
    once = opening(m)
    np.testing.assert_array_equal(opening(once), once)


@given(masks)
def test_closing_matches_brute_force(m):
    np.testing.assert_array_equal(closing(m), erode_ref(dilate_ref(m)))


# ---- components ----------------------------------------------------------

def test_two_blobs():
    m = np.zeros((6, 8), bool)
    m[1:3, 1:3] = True
    m[3:5, 5:7] = True
    regions = connected_components(m)
    assert len(regions) == 2
    assert [r.bbox for r in regions] == [(1, 1, 2, 2), (5, 3, 6, 4)]


def test_diagonal_pixels_connect():
    m = np.zeros((3, 3), bool)
    m[0, 0] = m[1, 1] = True
    regions = connected_components(m)
    assert len(regions) == 1 and regions[0].pixels == {(0, 0), (1, 1)}


def test_empty_mask_has_no_components():
    assert connected_components(np.zeros((4, 4), bool)) == []


@settings(max_examples=80, deadline=None)
@given(masks)
def test_components_partition_mask(m):
    regions = connected_components(m)
    got = sorted(sorted(r.pixels) for r in regions)
    want = sorted(sorted(c) for c in flood_components(m))
    assert got == want
    keys = [(r.bbox[1], r.bbox[0]) for r in regions]
    assert keys == sorted(keys)
    for r in regions:
        xs, ys = zip(*r.pixels)
        assert r.bbox == (min(xs), min(ys), max(xs), max(ys))
        assert r.centroid == pytest.approx((np.mean(xs), np.mean(ys)))


# ---- fractal dimension ---------------------------------------------------

@pytest.mark.parametrize("pixels, expected", [
    ([(0, 0)], 0.0),
    ([(0, 0), (1, 0), (0, 1), (1, 1)], 2.0),
    ([(0, 0), (1, 0), (2, 0), (3, 0)], 1.0),
])
def test_fractal_worked_cases(pixels, expected):
    assert fractal_dimension(TargetRegion.from_pixels(pixels)) == expected


def test_fractal_matches_box_cover_on_random_masks():
    rng = np.random.default_rng(2024)
    checked = 0
    while checked < 200:
        m = rng.random((16, 16)) < rng.uniform(0.05, 0.9)
        if not m.any():
            continue
        region = TargetRegion.from_mask(m)
        n1, n2 = box_cover_ref(region.pixels)
        expected = 0.0 if n1 == n2 else math.log2(n1 / n2)
        assert fractal_dimension(region) == expected
        checked += 1


# ---- features ------------------------------------------------------------

def test_single_pixel_features():
    f = extract_features(TargetRegion.from_pixels([(4, 9)]))
    assert f.as_array().tolist() == [1.0, 0.0, 0.0, 0.0, math.sqrt(2), 0.0]


def test_2x2_block_features():
    f = extract_features(TargetRegion.from_pixels([(0, 0), (1, 0), (0, 1), (1, 1)]))
    assert f.mass == 4
    for d in (f.dist_mean, f.dist_max, f.dist_min):
        assert d == pytest.approx(math.sqrt(0.5))
    assert f.diameter == pytest.approx(2 * math.sqrt(2))
    assert f.fractal_dim == 2.0


def test_row_features():
    f = extract_features(TargetRegion.from_pixels([(x, 3) for x in range(4)]))
    assert f.mass == 4
    assert (f.dist_mean, f.dist_max, f.dist_min) == pytest.approx((1.0, 1.5, 0.5))
    assert f.diameter == pytest.approx(math.sqrt(17))
    assert f.fractal_dim == 1.0


def test_meters_per_pixel_scales_lengths():
    region = TargetRegion.from_pixels([(x, 3) for x in range(4)])
    a, b = extract_features(region), extract_features(region, meters_per_pixel=0.5)
    assert b.mass == a.mass and b.fractal_dim == a.fractal_dim
    assert b.diameter == pytest.approx(a.diameter / 2)
    assert b.dist_max == pytest.approx(a.dist_max / 2)


@settings(max_examples=80, deadline=None)
@given(masks, st.integers(0, 50), st.integers(0, 50))
def test_feature_invariants(m, dx, dy):
    for r in connected_components(m):
        f = extract_features(r)
        assert f.mass >= 1
        assert 0 <= f.dist_min <= f.dist_mean <= f.dist_max
        assert 0 <= f.fractal_dim <= 2
        assert f.diameter >= f.dist_max
        moved = TargetRegion(r.xs + dx, r.ys + dy)
        assert extract_features(moved) == f
