"""
How visible is the payload?
===========================

At full capacity every channel byte changes, so the error budget is set by
the two overwritten bits plus the dither.  PSNR and SSIM put numbers on it.
"""

import math

import numpy as np

from spikestego import DitherConfig, ImageBuffer, metrics, stego
from spikestego.codebook import canonical
from spikestego.wav import AudioClip

cb = canonical()
rng = np.random.default_rng(1)

# %%
# A natural photograph if scikit-image is around, otherwise a noisy gradient.
try:
    from skimage.data import astronaut

    rgb = astronaut()
except ImportError:
    y, x = np.mgrid[0:256, 0:256]
    rgb = np.clip(np.stack([x, y, (x + y) // 2], axis=2) + rng.normal(0, 6, (256, 256, 3)), 0, 255)
rgba = np.dstack([rgb, np.full(rgb.shape[:2], 255)]).astype(np.uint8)
cover = ImageBuffer(rgba)

clip = AudioClip(48000, 1, rng.integers(-32768, 32768, stego.capacity(cover).max_samples))

# %%
# Sweep the dither amplitude.  The worst-case per-channel deviation is
# amplitude + 3, which bounds PSNR from below.
for mode in stego.DITHER_MODES:
    for amp in range(4):
        img, _ = stego.embed_audio(cover, clip, cb, DitherConfig(mode, amp, seed=7))
        r = metrics.fidelity(cover, img)
        floor = 10 * math.log10(255**2 / (amp + 3) ** 2)
        print(f"{mode:7s} amp {amp}: PSNR {r.psnr_rgb:6.2f} dB (floor {floor:5.2f})  "
              f"SSIM {r.ssim_rgb:.4f}  PSNR_RGBA {r.psnr_rgba:6.2f}")

# %%
# The full report for the default setting.
img, _ = stego.embed_audio(cover, clip, cb)
print(metrics.fidelity(cover, img).format_text())
