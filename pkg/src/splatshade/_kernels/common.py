"""Shared packing helpers consumed by both kernel backends."""

from __future__ import annotations

import numpy as np

MAX_SAMPLES = 1 << 16  # RNG stream key layout: pixel_index * 2^16 + sample_index


def pack_camera(camera) -> dict:
    return {
        "r_cw": np.ascontiguousarray(camera.rotation_cw, dtype=np.float64),
        "pos": np.ascontiguousarray(camera.position, dtype=np.float64),
        "fx": float(camera.fx),
        "fy": float(camera.fy),
        "cx": float(camera.cx),
        "cy": float(camera.cy),
        "width": int(camera.width),
        "height": int(camera.height),
        "near": float(camera.near),
    }


def sample_keys(pixel_indices: np.ndarray, n_samples: int) -> np.ndarray:
    """(P, S) uint64 RNG stream keys for per-pixel sample streams."""
    if n_samples > MAX_SAMPLES:
        raise ValueError(f"n_samples must be <= {MAX_SAMPLES}")
    pix = np.asarray(pixel_indices, dtype=np.uint64)
    s = np.arange(n_samples, dtype=np.uint64)
    return pix[:, None] * np.uint64(MAX_SAMPLES) + s[None, :]
