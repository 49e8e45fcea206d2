"""Cover/stego fidelity: per-channel MSE, PSNR and SSIM over RGB or RGBA.

SSIM uses the usual Gaussian-window formulation (11x11, sigma 1.5,
K1 = 0.01, K2 = 0.03, L = 255).  Local statistics are computed only where
the window fits entirely inside the image, then averaged; channels are
scored separately and the channel scores averaged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import DimensionMismatchError, ImageTooSmallError
from .stego import ImageBuffer

PEAK = 255.0
WINDOW = 11
SIGMA = 1.5
K1, K2 = 0.01, 0.03

_MODES = {"rgb": 3, "rgba": 4}


def _channels(a: ImageBuffer, b: ImageBuffer, mode: str):
    if mode not in _MODES:
        raise ValueError(f"mode must be 'rgb' or 'rgba', got {mode!r}")
    if a.pixels.shape != b.pixels.shape:
        raise DimensionMismatchError(
            f"image sizes differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    n = _MODES[mode]
    return a.pixels[..., :n].astype(np.float64), b.pixels[..., :n].astype(np.float64)


def mse_per_channel(a: ImageBuffer, b: ImageBuffer) -> np.ndarray:
    x, y = _channels(a, b, "rgba")
    return ((x - y) ** 2).mean(axis=(0, 1))


def psnr(a: ImageBuffer, b: ImageBuffer, mode: str = "rgb") -> float:
    """PSNR in dB with MSE pooled over all compared channels.

    Identical inputs give ``math.inf``.
    """
    x, y = _channels(a, b, mode)
    mse = ((x - y) ** 2).mean()
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(PEAK**2 / mse)


def gaussian_window(size: int = WINDOW, sigma: float = SIGMA) -> np.ndarray:
    """Normalized 1-D Gaussian taps; the 2-D window is its outer product."""
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    # separable weighted mean over every fully contained window
    rows = sliding_window_view(img, len(g), axis=1) @ g
    return sliding_window_view(rows, len(g), axis=0) @ g


def _ssim_plane(x: np.ndarray, y: np.ndarray, g: np.ndarray) -> float:
    c1 = (K1 * PEAK) ** 2
    c2 = (K2 * PEAK) ** 2
    mu_x = _filter_valid(x, g)
    mu_y = _filter_valid(y, g)
    var_x = _filter_valid(x * x, g) - mu_x**2
    var_y = _filter_valid(y * y, g) - mu_y**2
    cov = _filter_valid(x * y, g) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float((num / den).mean())


def ssim(a: ImageBuffer, b: ImageBuffer, mode: str = "rgb") -> float:
    x, y = _channels(a, b, mode)
    if min(a.width, a.height) < WINDOW:
        raise ImageTooSmallError(f"SSIM needs at least {WINDOW}x{WINDOW} pixels")
    if np.array_equal(x, y):
        return 1.0
    g = gaussian_window()
    return float(np.mean([_ssim_plane(x[..., c], y[..., c], g) for c in range(x.shape[2])]))


@dataclass(frozen=True)
class FidelityReport:
    mse_per_channel: tuple
    psnr_rgb: float
    psnr_rgba: float
    ssim_rgb: float
    ssim_rgba: float

    FIELDS = ("mse_r", "mse_g", "mse_b", "mse_a", "psnr_rgb", "psnr_rgba", "ssim_rgb", "ssim_rgba")

    def values(self) -> tuple:
        return (*self.mse_per_channel, self.psnr_rgb, self.psnr_rgba, self.ssim_rgb, self.ssim_rgba)

    def as_dict(self) -> dict:
        return dict(zip(self.FIELDS, self.values()))

    def format_text(self) -> str:
        width = max(len(f) for f in self.FIELDS)
        return "\n".join(f"{k:<{width}}  {_fmt(v)}" for k, v in self.as_dict().items())


def _fmt(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.4f}"


def fidelity(cover: ImageBuffer, stego: ImageBuffer) -> FidelityReport:
    return FidelityReport(
        mse_per_channel=tuple(float(m) for m in mse_per_channel(cover, stego)),
        psnr_rgb=psnr(cover, stego, "rgb"),
        psnr_rgba=psnr(cover, stego, "rgba"),
        ssim_rgb=ssim(cover, stego, "rgb"),
        ssim_rgba=ssim(cover, stego, "rgba"),
    )
