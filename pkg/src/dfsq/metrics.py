"""Image quality metrics on the luma channel and tensor error statistics.

Luma uses the BT.601 studio-swing weights common in super-resolution
evaluation::

    Y = 16 + (65.481 R + 128.553 G + 24.966 B) / 255

SSIM is the single-scale form with an 11x11 Gaussian window (sigma 1.5),
K1 = 0.01, K2 = 0.03, L = 255, averaged over the valid windows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import convolve2d

from .tensor_io import Image
from .uniform import round_half_away

_Y_WEIGHTS = np.array([65.481, 128.553, 24.966])
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1, SSIM_K2 = 0.01, 0.03
PEAK = 255.0


def rgb_to_y(img: Image) -> Image:
    if img.channels != 3:
        raise ValueError("rgb_to_y needs a 3-channel image; grayscale input is already luma")
    y = 16.0 + img.pixels.astype(np.float64) @ _Y_WEIGHTS / 255.0
    return Image(np.clip(round_half_away(y), 0, 255).astype(np.uint8))


def _luma(img: Image) -> np.ndarray:
    if img.channels == 3:
        img = rgb_to_y(img)
    return img.pixels[:, :, 0].astype(np.float64)


def _pair(a: Image, b: Image, shave: int) -> tuple[np.ndarray, np.ndarray]:
    if a.pixels.shape != b.pixels.shape:
        raise ValueError(f"image shapes differ: {a.pixels.shape} vs {b.pixels.shape}")
    if shave < 0 or 2 * shave >= a.height or 2 * shave >= a.width:
        raise ValueError(f"shave {shave} must be below half of each dimension ({a.height}x{a.width})")
    ya, yb = _luma(a), _luma(b)
    if shave:
        ya, yb = ya[shave:-shave, shave:-shave], yb[shave:-shave, shave:-shave]
    return ya, yb


def _psnr(ya: np.ndarray, yb: np.ndarray) -> tuple[float, float]:
    mse = float(np.mean((ya - yb) ** 2))
    return (math.inf if mse == 0 else 10 * math.log10(PEAK**2 / mse)), mse


def psnr_y(a: Image, b: Image, shave: int = 0) -> float:
    return _psnr(*_pair(a, b, shave))[0]


def _gaussian_window() -> np.ndarray:
    r = np.arange(SSIM_WINDOW) - (SSIM_WINDOW - 1) / 2
    g = np.exp(-(r**2) / (2 * SSIM_SIGMA**2))
    g /= g.sum()
    return np.outer(g, g)


def _ssim(x: np.ndarray, y: np.ndarray) -> float:
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {x.shape}")
    w = _gaussian_window()
    c1, c2 = (SSIM_K1 * PEAK) ** 2, (SSIM_K2 * PEAK) ** 2

    def filt(z):
        return convolve2d(z, w, mode="valid")

    mx, my = filt(x), filt(y)
    sxx = filt(x * x) - mx * mx
    syy = filt(y * y) - my * my
    sxy = filt(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return float(np.mean(num / den))


def ssim_y(a: Image, b: Image, shave: int = 0) -> float:
    return _ssim(*_pair(a, b, shave))


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    mse: float
    shave: int

    def to_dict(self) -> dict:
        # JSON has no infinity literal
        return {
            "psnr": "inf" if math.isinf(self.psnr) else self.psnr,
            "ssim": self.ssim,
            "mse": self.mse,
            "shave": self.shave,
        }


def compare_images(a: Image, b: Image, shave: int = 0) -> MetricReport:
    ya, yb = _pair(a, b, shave)
    psnr, mse = _psnr(ya, yb)
    return MetricReport(psnr=psnr, ssim=_ssim(ya, yb), mse=mse, shave=shave)


@dataclass
class ErrorStats:
    mse: float
    max_abs: float
    sse: float
    channel_mse: np.ndarray
    channel_max_abs: np.ndarray
    channel_sse: np.ndarray


def quant_error_stats(original, quantized) -> ErrorStats:
    """Error statistics, per channel (axis 1, pooled over the other axes) and overall."""
    a = np.asarray(original, dtype=np.float64)
    b = np.asarray(quantized, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    d = a - b
    axes = tuple(i for i in range(d.ndim) if i != 1) if d.ndim >= 2 else None
    sq = d * d
    if axes is None:
        ch_sse, ch_mse, ch_max = np.atleast_1d(sq.sum()), np.atleast_1d(sq.mean()), np.atleast_1d(np.abs(d).max())
    else:
        ch_sse, ch_mse, ch_max = sq.sum(axis=axes), sq.mean(axis=axes), np.abs(d).max(axis=axes)
    return ErrorStats(
        mse=float(sq.mean()),
        max_abs=float(np.abs(d).max()),
        sse=float(sq.sum()),
        channel_mse=ch_mse,
        channel_max_abs=ch_max,
        channel_sse=ch_sse,
    )
