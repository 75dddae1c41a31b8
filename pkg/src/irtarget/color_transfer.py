"""Exemplar-based colorization by local linear mapping.

Every pixel of the grayscale target is described by the gray window of side
``2e + 1`` around it. The window is matched against windows sampled from the
Y plane of a color template, reconstructed as an affine combination of its
``H`` nearest template windows, and the same combination is applied to the
template windows' center chroma ``(U, V)``. The target gray value is kept as
the output Y.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .colorspace import check_gray, check_rgb, rgb_to_yuv, yuv_to_rgb

# Upper bound on float64 cells materialized per distance block.
_BLOCK_CELLS = 1 << 22


@dataclass(frozen=True)
class TransferParams:
    """Knobs of the colorization.

    Parameters
    ----------
    e : int
        Half-width of the patch window; patches have ``(2e + 1)**2`` values.
    n_neighbors : int
        Number of nearest template patches ``H`` used per target patch.
    template_stride : int
        Grid stride used to sample template patch centers.
    regularization : float
        Ridge added to the local Gram matrix, relative to its trace.
    gamut_fit : bool
        Shrink transferred chroma toward zero where it would push the output
        pixel outside the RGB cube, so the output keeps the target luminance.
    """

    e: int = 2
    n_neighbors: int = 10
    template_stride: int = 2
    regularization: float = 1e-6
    gamut_fit: bool = True

    def __post_init__(self):
        if self.e < 0:
            raise ValueError("e must be >= 0")
        if self.n_neighbors < 1:
            raise ValueError("n_neighbors must be >= 1")
        if self.template_stride < 1:
            raise ValueError("template_stride must be >= 1")
        if not self.regularization >= 0:
            raise ValueError("regularization must be >= 0")


class PatchVector(NamedTuple):
    center: tuple  # (x, y)
    values: np.ndarray
    e: int


@dataclass(frozen=True)
class PatchSet:
    """A batch of patch vectors sharing one half-width.

    ``centers`` is ``(M, 2)`` integer ``(x, y)``; ``values`` is ``(M, L)``
    with ``L = (2e + 1)**2`` in row-major window order.
    """

    centers: np.ndarray
    values: np.ndarray
    e: int

    def __len__(self):
        return len(self.values)

    def __getitem__(self, j):
        x, y = self.centers[j]
        return PatchVector((int(x), int(y)), self.values[j], self.e)

    def __iter__(self):
        return (self[j] for j in range(len(self)))


@dataclass(frozen=True)
class TemplateIndex:
    """Template patches with the (U, V) of each patch center."""

    patches: PatchSet
    chroma: np.ndarray
    e: int

    def __post_init__(self):
        if len(self.patches) < 1:
            raise ValueError("template index is empty")
        if len(self.patches) != len(self.chroma):
            raise ValueError("patches and chroma differ in length")

    def __len__(self):
        return len(self.patches)


def _window_values(plane, e):
    """All (2e+1)^2 windows of ``plane`` with edge replication, row-major."""
    padded = np.pad(np.asarray(plane, dtype=np.float64), e, mode="edge")
    k = 2 * e + 1
    windows = sliding_window_view(padded, (k, k))
    return windows.reshape(plane.shape[0], plane.shape[1], k * k)


def _grid_centers(height, width, stride=1):
    ys, xs = np.meshgrid(np.arange(0, height, stride), np.arange(0, width, stride),
                         indexing="ij")
    return np.stack([xs.ravel(), ys.ravel()], axis=1)


def extract_target_patches(img, e):
    """One patch per pixel, in row-major pixel order (M = width * height)."""
    img = check_gray(img)
    if e < 0:
        raise ValueError("e must be >= 0")
    h, w = img.shape
    values = _window_values(img, e).reshape(h * w, -1)
    return PatchSet(_grid_centers(h, w), values, e)


def build_template_index(template, params=TransferParams()):
    """Sample template patches on a regular grid and record center chroma."""
    template = check_rgb(template)
    yuv = rgb_to_yuv(template)
    h, w = template.shape[:2]
    centers = _grid_centers(h, w, params.template_stride)
    if len(centers) == 0:
        raise ValueError("template sampling produced no patches")
    windows = _window_values(yuv[..., 0], params.e)
    xs, ys = centers[:, 0], centers[:, 1]
    patches = PatchSet(centers, windows[ys, xs], params.e)
    chroma = yuv[ys, xs, 1:3]
    return TemplateIndex(patches, chroma, params.e)


def _squared_distances(queries, bank):
    diff = queries[:, None, :] - bank[None, :, :]
    return np.sum(diff * diff, axis=-1)


def _knn_exact(queries, bank, k):
    d2 = _squared_distances(queries, bank)
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return order, np.take_along_axis(d2, order, axis=1)


def _knn(queries, bank, k):
    """Indices and squared distances of the k nearest rows of ``bank``.

    Ties are broken by lower bank index. Candidates are preselected with the
    ``|q|^2 + |t|^2 - 2 q.t`` expansion and a bound on its rounding error,
    then ranked by directly computed distances, so the result equals a plain
    linear scan.
    """
    n, dim = bank.shape
    if n <= 4 * k:
        return _knn_exact(queries, bank, k)
    qn = np.einsum("ij,ij->i", queries, queries)
    bn = np.einsum("ij,ij->i", bank, bank)
    fast = qn[:, None] + bn[None, :] - 2.0 * (queries @ bank.T)
    kth = np.partition(fast, k - 1, axis=1)[:, k - 1]
    err = 8.0 * (dim + 2) * np.finfo(np.float64).eps * (qn + bn.max())
    threshold = kth + 2.0 * err
    within = fast <= threshold[:, None]
    width = int(within.sum(axis=1).max())
    if width >= n // 2:
        return _knn_exact(queries, bank, k)
    cand = np.argpartition(fast, width - 1, axis=1)[:, :width]
    cand.sort(axis=1)
    diff = queries[:, None, :] - bank[cand]
    d2 = np.sum(diff * diff, axis=-1)
    d2[~np.take_along_axis(within, cand, axis=1)] = np.inf
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return np.take_along_axis(cand, order, axis=1), np.take_along_axis(d2, order, axis=1)


def nearest_neighbors(query, index, n_neighbors):
    """The ``n_neighbors`` template entries closest to ``query``.

    Returns a list of ``(entry id, euclidean distance)`` in ascending distance,
    equal distances ordered by entry id.
    """
    values = np.asarray(getattr(query, "values", query), dtype=np.float64)
    bank = index.patches.values
    if values.shape != (bank.shape[1],):
        raise ValueError(
            f"query length {values.size} does not match template patch length {bank.shape[1]}")
    if not 1 <= n_neighbors <= len(index):
        raise ValueError(f"n_neighbors must be in [1, {len(index)}]")
    ids, d2 = _knn(values[None, :], bank, n_neighbors)
    return [(int(i), float(np.sqrt(d))) for i, d in zip(ids[0], d2[0])]


def _batch_weights(queries, neighbors, regularization):
    """Sum-to-one least squares weights for a stack of local problems.

    queries: (m, L); neighbors: (m, k, L). Returns (m, k).
    """
    m, k, _ = neighbors.shape
    diff = neighbors - queries[:, None, :]
    gram = np.einsum("mil,mjl->mij", diff, diff)
    trace = np.trace(gram, axis1=1, axis2=2)
    ridge = np.where(trace > 0, regularization * trace, regularization)
    gram = gram + ridge[:, None, None] * np.eye(k)
    degenerate = trace == 0
    ones = np.ones((m, k, 1))
    try:
        w = np.linalg.solve(gram, ones)[..., 0]
    except np.linalg.LinAlgError:
        w = np.stack([np.linalg.lstsq(g, o, rcond=None)[0][:, 0] for g, o in zip(gram, ones)])
    # All neighbors coincide with the query: every affine combination is exact.
    w[degenerate] = 1.0
    total = w.sum(axis=1, keepdims=True)
    return w / total


def reconstruction_weights(query, neighbors, regularization=1e-6):
    """Contribution weights reconstructing ``query`` from its neighbors.

    Minimizes ``||query - sum_i w_i * neighbors[i]||**2`` subject to
    ``sum(w) == 1`` via the ridge-regularized local Gram system. Weights may be
    negative.
    """
    q = np.asarray(getattr(query, "values", query), dtype=np.float64)
    nb = np.asarray([getattr(n, "values", n) for n in neighbors], dtype=np.float64)
    if nb.ndim != 2 or len(nb) < 1:
        raise ValueError("need at least one neighbor")
    if nb.shape[1] != q.shape[0]:
        raise ValueError("neighbor and query lengths differ")
    return _batch_weights(q[None, :], nb[None, :, :], regularization)[0]


def reconstruction_residual(query, neighbors, weights):
    q = np.asarray(getattr(query, "values", query), dtype=np.float64)
    nb = np.asarray([getattr(n, "values", n) for n in neighbors], dtype=np.float64)
    r = q - np.asarray(weights) @ nb
    return float(r @ r)


def transfer_chroma(weights, neighbor_chroma):
    """Blend neighbor (U, V) pairs with the reconstruction weights."""
    w = np.asarray(weights, dtype=np.float64)
    c = np.asarray(neighbor_chroma, dtype=np.float64).reshape(-1, 2)
    if len(w) != len(c):
        raise ValueError("weights and chroma differ in length")
    u, v = w @ c
    return float(u), float(v)


def fit_chroma_to_gamut(y, uv):
    """Scale each (U, V) toward zero so Y + chroma stays inside the RGB cube.

    y: (m,), uv: (m, 2). Luminance is untouched; a zero scale (gray) is always
    feasible because Y lies in [0, 255].
    """
    u, v = uv[:, 0], uv[:, 1]
    offsets = np.stack([1.14 * v, -0.39 * u - 0.58 * v, 2.03 * u], axis=1)
    room_up = (255.0 - y)[:, None]
    room_down = y[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        limit = np.where(offsets > 0, room_up / offsets,
                         np.where(offsets < 0, room_down / -offsets, np.inf))
    scale = np.clip(limit.min(axis=1), 0.0, 1.0)
    return uv * scale[:, None]


def _colorize_block(queries, index, params):
    k = params.n_neighbors
    ids, _ = _knn(queries, index.patches.values, k)
    neighbors = index.patches.values[ids]
    weights = _batch_weights(queries, neighbors, params.regularization)
    return np.einsum("mk,mkc->mc", weights, index.chroma[ids])


def colorize(target, template, params=TransferParams(), workers=1, index=None):
    """Colorize a grayscale frame from a color template.

    Parameters
    ----------
    target : (h, w) uint8 array
    template : (h', w', 3) uint8 array
    params : TransferParams
    workers : int
        Threads used over fixed-size pixel blocks. The block partition does not
        depend on this value, so output is bit-identical for any worker count.
    index : TemplateIndex, optional
        Prebuilt index for ``template`` (reused across frames).

    Returns
    -------
    (h, w, 3) uint8 RGB image whose Y is the target gray.
    """
    target = check_gray(target)
    if index is None:
        index = build_template_index(template, params)
    if index.e != params.e:
        raise ValueError("template index half-width does not match params.e")
    if params.n_neighbors > len(index):
        raise ValueError(
            f"n_neighbors={params.n_neighbors} exceeds template patch count {len(index)}")

    h, w = target.shape
    queries = _window_values(target, params.e).reshape(h * w, -1)
    block = max(1, _BLOCK_CELLS // (len(index) * queries.shape[1]))
    starts = range(0, len(queries), block)
    uv = np.empty((len(queries), 2))

    def run(s):
        uv[s:s + block] = _colorize_block(queries[s:s + block], index, params)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, starts))
    else:
        for s in starts:
            run(s)

    y = target.reshape(-1).astype(np.float64)
    if params.gamut_fit:
        uv = fit_chroma_to_gamut(y, uv)
    yuv = np.concatenate([y[:, None], uv], axis=1).reshape(h, w, 3)
    return yuv_to_rgb(yuv)
