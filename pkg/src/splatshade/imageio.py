"""PFM and PNG image I/O.

PFM layout written by this package: ``PF`` (RGB) or ``Pf`` (grayscale) header
line, ``width height`` line, scale line ``-1.0`` (little-endian floats), then
rows of float32 samples bottom-up. Reads accept big-endian files (positive
scale) as well.
"""

from __future__ import annotations

import numpy as np
from PIL import Image


def write_pfm(image: np.ndarray, path):
    image = np.asarray(image, dtype=np.float32)
    if image.ndim == 2:
        channels = 1
    elif image.ndim == 3 and image.shape[2] == 3:
        channels = 3
    else:
        raise ValueError(f"PFM supports HxW or HxWx3 images, got {image.shape}")
    h, w = image.shape[:2]
    if h == 0 or w == 0:
        raise ValueError("cannot write empty image")
    with open(path, "wb") as f:
        f.write(b"PF\n" if channels == 3 else b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(image[::-1].astype("<f4").tobytes())


def _read_token(f) -> bytes:
    tok = b""
    while True:
        c = f.read(1)
        if not c:
            raise ValueError("truncated PFM header")
        if c in b" \t\r\n":
            if tok:
                return tok
            continue
        tok += c


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic == b"PF":
            channels = 3
        elif magic == b"Pf":
            channels = 1
        else:
            raise ValueError(f"not a PFM file (magic {magic!r})")
        w = int(_read_token(f))
        h = int(_read_token(f))
        scale = float(_read_token(f))
        if w <= 0 or h <= 0:
            raise ValueError(f"bad PFM dimensions {w}x{h}")
        dtype = "<f4" if scale < 0 else ">f4"
        payload = f.read(w * h * channels * 4)
        if len(payload) != w * h * channels * 4:
            raise ValueError("truncated PFM payload")
    data = np.frombuffer(payload, dtype=dtype).astype(np.float32)
    shape = (h, w, 3) if channels == 3 else (h, w)
    image = data.reshape(shape)[::-1].copy()
    if abs(scale) not in (0.0, 1.0):
        image *= abs(scale)
    if not np.all(np.isfinite(image)):
        raise ValueError("PFM contains non-finite samples")
    return image


def write_png(image: np.ndarray, path):
    """Write an 8-bit RGB PNG from a uint8 array or a float image in [0,1]."""
    image = np.asarray(image)
    if image.dtype != np.uint8:
        image = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    if image.ndim == 2:
        image = np.repeat(image[:, :, None], 3, axis=2)
    Image.fromarray(image, mode="RGB").save(path, format="PNG")


def read_png(path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"))


def png_bytes(image: np.ndarray) -> bytes:
    import io

    buf = io.BytesIO()
    img = np.asarray(image)
    if img.dtype != np.uint8:
        img = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    Image.fromarray(img, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
