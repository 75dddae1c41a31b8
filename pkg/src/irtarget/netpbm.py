"""Binary PGM (P5) and PPM (P6) with maxval 255."""
import numpy as np


class ImageFormatError(ValueError):
    pass


def _parse(data, magic):
    if data[:2] != magic:
        raise ImageFormatError(f"expected magic {magic.decode()}, got {data[:2]!r}")
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated or malformed header")
        fields.append(int(data[start:pos]))
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ImageFormatError("missing whitespace after header")
    width, height, maxval = fields
    if maxval != 255:
        raise ImageFormatError(f"unsupported maxval {maxval}; only 255 is accepted")
    if width < 1 or height < 1:
        raise ImageFormatError("image dimensions must be positive")
    return width, height, pos + 1


def decode(data):
    """Decode P5 or P6 bytes to a uint8 array ((h, w) or (h, w, 3))."""
    magic = bytes(data[:2])
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise ImageFormatError(f"not a binary PGM/PPM file (magic {magic!r})")
    width, height, offset = _parse(data, magic)
    n = width * height * channels
    raster = data[offset:offset + n]
    if len(raster) != n:
        raise ImageFormatError(f"raster truncated: expected {n} bytes, got {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8)
    shape = (height, width) if channels == 1 else (height, width, 3)
    return arr.reshape(shape).copy()


def encode(img):
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError("image must be uint8")
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot encode array of shape {img.shape}")
    header = b"%s\n%d %d\n255\n" % (magic, img.shape[1], img.shape[0])
    return header + np.ascontiguousarray(img).tobytes()


def read_image(path):
    with open(path, "rb") as fh:
        return decode(fh.read())


def read_pgm(path):
    img = read_image(path)
    if img.ndim != 2:
        raise ImageFormatError(f"{path}: expected a grayscale PGM")
    return img


def read_ppm(path):
    img = read_image(path)
    if img.ndim != 3:
        raise ImageFormatError(f"{path}: expected a color PPM")
    return img


def write_image(path, img):
    with open(path, "wb") as fh:
        fh.write(encode(img))
