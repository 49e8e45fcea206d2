import math

import numpy as np
import pytest
from skimage.metrics import peak_signal_noise_ratio, structural_similarity

from spikestego import metrics, stego
from spikestego.errors import DimensionMismatchError, ImageTooSmallError
from spikestego.stego import DitherConfig, ImageBuffer

from oracles import naive_ssim


def _img(rng, h=24, w=24):
    return ImageBuffer(rng.integers(0, 256, (h, w, 4), dtype=np.uint8))


def _smooth(rng, h=48, w=48):
    y, x = np.mgrid[0:h, 0:w]
    base = 120 + 60 * np.sin(x / 7.0)[..., None] * np.cos(y / 9.0)[..., None]
    px = base + rng.normal(0, 8, (h, w, 4))
    return ImageBuffer(np.clip(px, 0, 255).astype(np.uint8))


def test_identical(rng):
    a = _img(rng)
    assert metrics.psnr(a, a) == math.inf
    assert metrics.psnr(a, a, "rgba") == math.inf
    assert metrics.ssim(a, a) == 1.0
    assert metrics.fidelity(a, a).format_text().count("inf") == 2


def test_constant_offset_psnr():
    a = ImageBuffer(np.full((2, 2, 4), 100, np.uint8))
    b = ImageBuffer(np.full((2, 2, 4), 102, np.uint8))
    assert metrics.psnr(a, b) == pytest.approx(10 * math.log10(255**2 / 4))
    assert metrics.psnr(a, b) == pytest.approx(42.110, abs=1e-3)


def test_psnr_matches_skimage(rng):
    a, b = _img(rng), _img(rng)
    ref = peak_signal_noise_ratio(a.pixels[..., :3], b.pixels[..., :3], data_range=255)
    assert metrics.psnr(a, b) == pytest.approx(ref, rel=1e-12)


def test_rgba_mse_pools_channels(rng):
    a, b = _img(rng), _img(rng)
    m = metrics.mse_per_channel(a, b)
    mse_rgb = 10 ** (-metrics.psnr(a, b) / 10) * 255**2
    mse_rgba = 10 ** (-metrics.psnr(a, b, "rgba") / 10) * 255**2
    assert mse_rgb == pytest.approx(m[:3].mean())
    assert mse_rgba == pytest.approx((3 * mse_rgb + m[3]) / 4)


def test_ssim_matches_naive_loops(rng):
    a = _smooth(rng, 16, 18)
    b = ImageBuffer(np.clip(a.pixels.astype(int) + rng.integers(-20, 21, a.pixels.shape), 0, 255).astype(np.uint8))
    per_channel = [naive_ssim(a.pixels[..., c], b.pixels[..., c]) for c in range(3)]
    assert metrics.ssim(a, b) == pytest.approx(np.mean(per_channel), abs=1e-9)


def test_ssim_matches_skimage(rng):
    a = _smooth(rng)
    b = ImageBuffer(np.clip(a.pixels.astype(int) + rng.integers(-30, 31, a.pixels.shape), 0, 255).astype(np.uint8))
    for mode, n in (("rgb", 3), ("rgba", 4)):
        ref = structural_similarity(
            a.pixels[..., :n], b.pixels[..., :n], data_range=255, channel_axis=2,
            gaussian_weights=True, sigma=1.5, use_sample_covariance=False,
        )
        assert metrics.ssim(a, b, mode) == pytest.approx(ref, abs=1e-6)


def test_ssim_inversion_is_low(rng):
    a = _smooth(rng)
    inv = ImageBuffer(255 - a.pixels)
    assert metrics.ssim(a, inv) < 0.2


def test_symmetry(rng):
    a, b = _smooth(rng), _smooth(rng)
    assert metrics.ssim(a, b) == pytest.approx(metrics.ssim(b, a))
    assert metrics.psnr(a, b) == metrics.psnr(b, a)


def test_more_noise_scores_worse(rng):
    a = _smooth(rng)
    prev_p, prev_s = math.inf, 1.0
    for sigma in (2, 6, 15, 40):
        noisy = np.clip(a.pixels + rng.normal(0, sigma, a.pixels.shape), 0, 255).astype(np.uint8)
        b = ImageBuffer(noisy)
        p, s = metrics.psnr(a, b), metrics.ssim(a, b)
        assert p < prev_p and s < prev_s
        prev_p, prev_s = p, s


def test_errors(rng):
    with pytest.raises(DimensionMismatchError):
        metrics.psnr(_img(rng, 12, 12), _img(rng, 12, 13))
    with pytest.raises(ImageTooSmallError):
        metrics.ssim(_img(rng, 10, 40), _img(rng, 10, 40))
    with pytest.raises(ValueError):
        metrics.psnr(_img(rng), _img(rng), "yuv")


@pytest.mark.parametrize("amp", range(4))
def test_embedding_psnr_floor(amp, rng):
    # worst-case deviation per channel is max(3, amp + 3) before clipping
    cover = _smooth(rng, 30, 30)
    bits = rng.integers(0, 2, 8 * cover.n_pixels, dtype=np.uint8)
    out = stego.embed_bits(cover, bits, DitherConfig("uniform", amp, 1))
    floor = 10 * math.log10(255**2 / (amp + 3) ** 2)
    assert metrics.psnr(cover, out) >= floor
    assert metrics.psnr(cover, out, "rgba") >= floor


def test_report_fields(rng):
    a = _smooth(rng)
    b = ImageBuffer(a.pixels ^ 1)
    d = metrics.fidelity(a, b).as_dict()
    assert list(d) == list(metrics.FidelityReport.FIELDS)
    assert d["mse_r"] == pytest.approx(1.0)
