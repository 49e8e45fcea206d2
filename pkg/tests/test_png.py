import io
import struct
import zlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image

from spikestego import png, stego
from spikestego.errors import MissingAlphaError, PNGDecodeError, UnsupportedBitDepthError
from spikestego.stego import DitherConfig, ImageBuffer
from spikestego.wav import AudioClip

from oracles import _png_chunk, write_png_adam7


def _pillow_bytes(img, **kw):
    buf = io.BytesIO()
    img.save(buf, format="PNG", **kw)
    return buf.getvalue()


def _filtered_png(pixels, ftype):
    """RGBA8 PNG where every row uses filter ``ftype``, filtered naively."""
    h, w, _ = pixels.shape
    raw = bytearray()
    prev = [0] * (w * 4)
    for row in pixels:
        cur = [int(v) for v in row.reshape(-1)]
        raw.append(ftype)
        for i, x in enumerate(cur):
            a = cur[i - 4] if i >= 4 else 0
            b = prev[i]
            c = prev[i - 4] if i >= 4 else 0
            if ftype == 0:
                pred = 0
            elif ftype == 1:
                pred = a
            elif ftype == 2:
                pred = b
            elif ftype == 3:
                pred = (a + b) // 2
            else:
                p = a + b - c
                pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
                pred = a if pa <= pb and pa <= pc else (b if pb <= pc else c)
            raw.append((int(x) - pred) % 256)
        prev = cur
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 6, 0, 0, 0)
    return (png.SIGNATURE + _png_chunk(b"IHDR", ihdr)
            + _png_chunk(b"IDAT", zlib.compress(bytes(raw))) + _png_chunk(b"IEND", b""))


def test_two_by_two_rgba_roundtrip():
    px = np.array([[[0, 1, 2, 3], [255, 254, 253, 252]], [[10, 20, 30, 40], [7, 7, 7, 0]]], np.uint8)
    data = png.encode_png(ImageBuffer(px))
    assert np.array_equal(png.decode_png(data).pixels, px)
    assert np.array_equal(np.asarray(Image.open(io.BytesIO(data))), px)


def test_rgb_under_require_policy(rng):
    rgb = rng.integers(0, 256, (4, 5, 3), dtype=np.uint8)
    data = _pillow_bytes(Image.fromarray(rgb, "RGB"))
    with pytest.raises(MissingAlphaError):
        png.decode_png(data, "require")
    out = png.decode_png(data, "synthesize").pixels
    assert np.array_equal(out[..., :3], rgb) and (out[..., 3] == 255).all()


def test_16bit_rejected():
    arr = np.arange(12, dtype=np.uint16).reshape(3, 4) * 5000
    data = _pillow_bytes(Image.fromarray(arr))
    with pytest.raises(UnsupportedBitDepthError):
        png.decode_png(data)


@pytest.mark.parametrize("mode", ["L", "LA", "RGB", "RGBA", "P", "1"])
def test_matches_pillow(mode, rng):
    base = Image.fromarray(rng.integers(0, 256, (13, 17, 4), dtype=np.uint8), "RGBA")
    img = base.convert(mode)
    data = _pillow_bytes(img)
    expected = np.asarray(img.convert("RGBA"))
    assert np.array_equal(png.decode_png(data).pixels, expected)


@pytest.mark.parametrize("bits", [1, 2, 4])
def test_low_depth_palette(bits, rng):
    n = 1 << bits
    idx = rng.integers(0, n, (9, 11), dtype=np.uint8)
    img = Image.fromarray(idx, "P")
    pal = rng.integers(0, 256, 3 * n, dtype=np.uint8).tolist()
    img.putpalette(pal)
    data = _pillow_bytes(img, bits=bits)
    assert data[24] == bits  # IHDR bit depth byte
    expected = np.asarray(img.convert("RGBA"))
    assert np.array_equal(png.decode_png(data).pixels, expected)


def test_palette_transparency(rng):
    img = Image.fromarray(rng.integers(0, 4, (5, 6), dtype=np.uint8), "P")
    img.putpalette([255, 0, 0, 0, 255, 0, 0, 0, 255, 9, 9, 9])
    data = _pillow_bytes(img, transparency=bytes([0, 128, 255, 40]))
    expected = np.asarray(Image.open(io.BytesIO(data)).convert("RGBA"))
    assert np.array_equal(png.decode_png(data, "require").pixels, expected)


@pytest.mark.parametrize("ftype", range(5))
def test_all_filter_types(ftype, rng):
    px = rng.integers(0, 256, (7, 9, 4), dtype=np.uint8)
    assert np.array_equal(png.decode_png(_filtered_png(px, ftype)).pixels, px)


@pytest.mark.parametrize("shape", [(1, 1), (3, 5), (8, 8), (13, 21)])
def test_adam7(shape, rng):
    px = rng.integers(0, 256, (*shape, 4), dtype=np.uint8)
    data = write_png_adam7(px)
    assert np.array_equal(np.asarray(Image.open(io.BytesIO(data))), px)
    assert np.array_equal(png.decode_png(data).pixels, px)


def test_corrupt_crc(rng):
    data = bytearray(png.encode_png(ImageBuffer(rng.integers(0, 256, (4, 4, 4), dtype=np.uint8))))
    data[40] ^= 0xFF
    with pytest.raises(PNGDecodeError):
        png.decode_png(bytes(data))


def test_truncated_and_not_png():
    data = png.encode_png(ImageBuffer.blank(3, 3))
    with pytest.raises(PNGDecodeError):
        png.decode_png(data[:-20])
    with pytest.raises(PNGDecodeError):
        png.decode_png(b"GIF89a" + data[6:])


def test_zero_dimension_write():
    with pytest.raises(ValueError):
        png.encode_png(ImageBuffer(np.zeros((0, 4, 4), np.uint8)))


@settings(max_examples=100, deadline=None)
@given(w=st.integers(1, 40), h=st.integers(1, 40), seed=st.integers(0, 2**32))
def test_random_roundtrip(w, h, seed):
    px = np.random.default_rng(seed).integers(0, 256, (h, w, 4), dtype=np.uint8)
    data = png.encode_png(ImageBuffer(px))
    assert np.array_equal(png.decode_png(data, "require").pixels, px)


def test_writer_output_readable_by_pillow(rng):
    # smooth gradient so the writer picks Sub/Up rows too
    y, x = np.mgrid[0:32, 0:48]
    px = np.stack([x * 5, y * 7, (x + y) * 2, np.full_like(x, 200)], axis=2).astype(np.uint8)
    data = png.encode_png(ImageBuffer(px))
    assert np.array_equal(np.asarray(Image.open(io.BytesIO(data))), px)


def test_stego_file_roundtrip(tmp_path, cb, rng):
    cover = ImageBuffer(rng.integers(0, 256, (20, 20, 4), dtype=np.uint8))
    clip = AudioClip(16000, 1, rng.integers(-32768, 32768, 100))
    img, sidecar = stego.embed_audio(cover, clip, cb, DitherConfig("uniform", 3, 5))
    png.save_png(img, tmp_path / "s.png")
    sidecar.save(tmp_path / "s.ssnk")
    back = stego.extract_audio(png.load_png(tmp_path / "s.png", "require"),
                               stego.KeySidecar.load(tmp_path / "s.ssnk"), cb)
    assert back == clip
