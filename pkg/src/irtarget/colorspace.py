"""RGB <-> YUV conversion and luminance.

Images are plain numpy arrays: an RGB image is ``uint8`` of shape
``(height, width, 3)`` and a YUV image is ``float64`` of the same shape with
planes ``Y, U, V`` along the last axis. U and V are signed reals; they are
never biased into ``[0, 255]``.

The forward transform keeps the three-decimal coefficients as integer
thousandths so that each output is a single correctly rounded division,
e.g. ``rgb_to_yuv`` of pure red gives exactly ``Y == 76.245``.
"""
import numpy as np

# Forward coefficients in thousandths, rows Y, U, V.
RGB_TO_YUV_MILLI = np.array([
    [299, 587, 114],
    [-147, -289, 436],
    [615, -515, -100],
], dtype=np.int64)

RGB_TO_YUV = RGB_TO_YUV_MILLI / 1000.0

YUV_TO_RGB = np.array([
    [1.0, 0.0, 1.14],
    [1.0, -0.39, -0.58],
    [1.0, 2.03, 0.0],
])

U_LIMIT = 111.18
V_LIMIT = 156.825


def check_rgb(img):
    """Validate an RGB image and return it as a uint8 array."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"RGB image must have shape (h, w, 3), got {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("RGB image must be at least 1x1")
    if img.dtype != np.uint8:
        if np.any(img < 0) or np.any(img > 255) or np.any(img != np.round(img)):
            raise ValueError("RGB channel values must be integers in [0, 255]")
        img = img.astype(np.uint8)
    return img


def check_gray(img):
    """Validate a grayscale image and return it as a uint8 array."""
    img = np.asarray(img)
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"gray image must be a non-empty 2-D array, got {img.shape}")
    if img.dtype != np.uint8:
        if np.any(img < 0) or np.any(img > 255) or np.any(img != np.round(img)):
            raise ValueError("gray values must be integers in [0, 255]")
        img = img.astype(np.uint8)
    return img


def _weighted(rgb, row):
    r, g, b = (rgb[..., k] for k in range(3))
    c = RGB_TO_YUV_MILLI[row]
    return (c[0] * r + c[1] * g + c[2] * b) / 1000.0


def rgb_to_yuv(img):
    """Convert RGB to YUV with the fixed 3x3 forward matrix.

    Accepts any array whose last axis holds (R, G, B); integer images are
    converted exactly, real-valued inputs (e.g. scaled colors) are allowed so
    the map can be used as the linear operator it is. U and V are not rounded.
    """
    rgb = np.asarray(img, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ValueError("last axis must hold 3 channels")
    return np.stack([_weighted(rgb, k) for k in range(3)], axis=-1)


def yuv_to_rgb(img):
    """Convert YUV back to an 8-bit RGB image.

    Each channel is mapped by the fixed inverse matrix, clamped to ``[0, 255]``
    and rounded half-up. The forward and inverse matrices are only approximate
    inverses of each other, hence the clamp.
    """
    yuv = np.asarray(img, dtype=np.float64)
    if yuv.shape[-1] != 3:
        raise ValueError("last axis must hold 3 channels")
    y, u, v = yuv[..., 0], yuv[..., 1], yuv[..., 2]
    rgb = np.stack([
        y + 1.14 * v,
        y - 0.39 * u - 0.58 * v,
        y + 2.03 * u,
    ], axis=-1)
    return round_half_up(np.clip(rgb, 0.0, 255.0)).astype(np.uint8)


def round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


def luminance(r, g, b):
    """Weighted luminance ``0.299 R + 0.587 G + 0.114 B``, unrounded.

    Works on scalars or arrays and is bit-identical to the Y plane of
    :func:`rgb_to_yuv`.
    """
    r = np.asarray(r, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    y = (299 * r + 587 * g + 114 * b) / 1000.0
    return float(y) if y.ndim == 0 else y


def luminance_plane(img):
    """Y plane of an RGB image."""
    rgb = np.asarray(img)
    return luminance(rgb[..., 0], rgb[..., 1], rgb[..., 2])
