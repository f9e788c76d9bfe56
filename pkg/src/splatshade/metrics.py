"""Image losses and quality metrics (regression checks, not a training loop)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .splat import GBuffer

PSNR_CAP = 99.0


@dataclass
class LossWeights:
    lambda_1: float = 0.8
    lambda_o: float = 0.1
    lambda_n: float = 0.05
    lambda_reg: float = 0.01

    def validate(self):
        if not 0.0 <= self.lambda_1 <= 1.0:
            raise ValueError("lambda_1 must be in [0,1]")
        if min(self.lambda_o, self.lambda_n, self.lambda_reg) < 0:
            raise ValueError("loss weights must be non-negative")
        return self


def _gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    ax = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-0.5 * (ax / sigma) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


def ssim(a: np.ndarray, b: np.ndarray, data_range: float = 1.0) -> float:
    """Mean SSIM with an 11x11 Gaussian window (sigma 1.5), valid region only."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[..., None]
        b = b[..., None]
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    win = _gaussian_window()

    vals = []
    for ch in range(a.shape[2]):
        x, y = a[..., ch], b[..., ch]
        mx = fftconvolve(x, win, mode="valid")
        my = fftconvolve(y, win, mode="valid")
        mxx = fftconvolve(x * x, win, mode="valid")
        myy = fftconvolve(y * y, win, mode="valid")
        mxy = fftconvolve(x * y, win, mode="valid")
        vx = mxx - mx * mx
        vy = myy - my * my
        cxy = mxy - mx * my
        s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        vals.append(s.mean())
    return float(np.mean(vals))


def loss_rgb(render: np.ndarray, gt: np.ndarray, lambda_1: float = 0.8) -> float:
    """lambda_1 * mean-L1 + (1 - lambda_1) * (1 - SSIM)."""
    render = np.asarray(render, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if render.shape != gt.shape:
        raise ValueError(f"image shapes differ: {render.shape} vs {gt.shape}")
    l1 = np.abs(render - gt).mean()
    s = ssim(render, gt) if lambda_1 < 1.0 else 1.0
    return float(lambda_1 * l1 + (1.0 - lambda_1) * (1.0 - s))


def loss_opacity(gbuffer: GBuffer) -> float:
    """Mean squared deviation of accumulated alpha from full coverage."""
    a = gbuffer.accum_alpha.astype(np.float64)
    return float(((1.0 - a) ** 2).mean())


def loss_normal(computed: np.ndarray, reference: np.ndarray) -> float:
    """Mean (1 - n_a . n_b) over pixels where both normals are valid."""
    a = np.asarray(computed, dtype=np.float64)
    b = np.asarray(reference, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"normal shapes differ: {a.shape} vs {b.shape}")
    valid = (np.linalg.norm(a, axis=-1) > 0.5) & (np.linalg.norm(b, axis=-1) > 0.5)
    if not valid.any():
        return 0.0
    return float((1.0 - np.sum(a * b, axis=-1)[valid]).mean())


def _tv(channel: np.ndarray) -> float:
    c = channel.astype(np.float64)
    n = c.shape[0] * c.shape[1]
    tx = np.abs(np.diff(c, axis=1)).sum()
    ty = np.abs(np.diff(c, axis=0)).sum()
    return float((tx + ty) / n)


def loss_tv(gbuffer: GBuffer) -> float:
    """Total variation of the material channels, normalized per pixel.

    Forward differences in x and y; the RGB albedo contributes the sum of its
    components.
    """
    total = sum(_tv(gbuffer.albedo[..., ch]) for ch in range(3))
    total += _tv(gbuffer.roughness)
    total += _tv(gbuffer.metallic)
    total += _tv(gbuffer.gamma)
    return float(total)


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10 log10(1 / MSE) for images in [0,1]; identical images cap at 99 dB."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    mse = ((a - b) ** 2).mean()
    if mse <= 0.0:
        return PSNR_CAP
    return float(min(10.0 * np.log10(1.0 / mse), PSNR_CAP))
