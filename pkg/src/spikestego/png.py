"""Lossless PNG reading and writing for 8-bit RGBA pixel buffers.

The reader understands every colour type at bit depths 1-8 (grey and
palette images may use 1, 2 or 4 bits), all five scanline filters and Adam7
interlacing.  16-bit images are rejected: narrowing them would alter the
low bits the payload lives in.  The writer always emits non-interlaced
8-bit RGBA, picking a filter per row.

No gamma, colour-profile or background chunks are interpreted.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .errors import MissingAlphaError, PNGDecodeError, UnsupportedBitDepthError
from .stego import ImageBuffer

SIGNATURE = b"\x89PNG\r\n\x1a\n"

GREY, RGB, PALETTE, GREY_ALPHA, RGBA = 0, 2, 3, 4, 6
_CHANNELS = {GREY: 1, RGB: 3, PALETTE: 1, GREY_ALPHA: 2, RGBA: 4}
_DEPTHS = {GREY: (1, 2, 4, 8, 16), RGB: (8, 16), PALETTE: (1, 2, 4, 8), GREY_ALPHA: (8, 16), RGBA: (8, 16)}

# (x0, y0, dx, dy) per Adam7 pass
_ADAM7 = ((0, 0, 8, 8), (4, 0, 8, 8), (0, 4, 4, 8), (2, 0, 4, 4), (0, 2, 2, 4), (1, 0, 2, 2), (0, 1, 1, 2))

ALPHA_POLICIES = ("require", "synthesize")


def _chunks(data: bytes):
    if data[:8] != SIGNATURE:
        raise PNGDecodeError("missing PNG signature")
    pos = 8
    while True:
        if pos + 8 > len(data):
            raise PNGDecodeError("file ends before IEND")
        length, ctype = struct.unpack_from(">I4s", data, pos)
        body = data[pos + 8 : pos + 8 + length]
        crc_at = pos + 8 + length
        if len(body) < length or crc_at + 4 > len(data):
            raise PNGDecodeError(f"chunk {ctype!r} truncated")
        (crc,) = struct.unpack_from(">I", data, crc_at)
        if zlib.crc32(ctype + body) != crc:
            raise PNGDecodeError(f"CRC mismatch in chunk {ctype!r}")
        yield ctype, body
        if ctype == b"IEND":
            return
        pos = crc_at + 4


def _paeth_row(x: bytearray, prev: bytes, bpp: int) -> None:
    for i in range(len(x)):
        a = x[i - bpp] if i >= bpp else 0
        b = prev[i]
        c = prev[i - bpp] if i >= bpp else 0
        p = a + b - c
        pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
        if pa <= pb and pa <= pc:
            pred = a
        elif pb <= pc:
            pred = b
        else:
            pred = c
        x[i] = (x[i] + pred) & 0xFF


def _average_row(x: bytearray, prev: bytes, bpp: int) -> None:
    for i in range(len(x)):
        a = x[i - bpp] if i >= bpp else 0
        x[i] = (x[i] + ((a + prev[i]) >> 1)) & 0xFF


def _unfilter(raw: memoryview, rows: int, stride: int, bpp: int) -> np.ndarray:
    """Undo per-scanline filtering; returns ``(rows, stride)`` uint8."""
    if len(raw) < rows * (stride + 1):
        raise PNGDecodeError("image data shorter than the declared dimensions")
    out = np.zeros((rows, stride), dtype=np.uint8)
    prev = np.zeros(stride, dtype=np.uint8)
    for r in range(rows):
        start = r * (stride + 1)
        ftype = raw[start]
        line = np.frombuffer(raw[start + 1 : start + 1 + stride], dtype=np.uint8)
        if ftype == 0:
            cur = line.copy()
        elif ftype == 1:
            # Sub: running sum per byte lane, modulo 256
            pad = (-stride) % bpp
            lanes = np.concatenate([line, np.zeros(pad, np.uint8)]).reshape(-1, bpp)
            cur = np.cumsum(lanes, axis=0, dtype=np.uint8).reshape(-1)[:stride]
        elif ftype == 2:
            cur = line + prev
        elif ftype == 3:
            buf = bytearray(line.tobytes())
            _average_row(buf, prev.tobytes(), bpp)
            cur = np.frombuffer(bytes(buf), dtype=np.uint8)
        elif ftype == 4:
            buf = bytearray(line.tobytes())
            _paeth_row(buf, prev.tobytes(), bpp)
            cur = np.frombuffer(bytes(buf), dtype=np.uint8)
        else:
            raise PNGDecodeError(f"unknown filter type {ftype} on row {r}")
        out[r] = cur
        prev = out[r]
    return out


def _unpack_samples(rows: np.ndarray, width: int, depth: int, channels: int) -> np.ndarray:
    """Scanline bytes -> ``(rows, width, channels)`` sample values."""
    if depth == 8:
        return rows[:, : width * channels].reshape(len(rows), width, channels)
    bits = np.unpackbits(rows, axis=1)
    per_row = width * channels * depth
    bits = bits[:, :per_row].reshape(len(rows), -1, depth)
    weights = (1 << np.arange(depth - 1, -1, -1)).astype(np.uint8)
    vals = (bits * weights).sum(axis=2, dtype=np.uint16).astype(np.uint8)
    return vals.reshape(len(rows), width, channels)


def decode_png(data: bytes, alpha_policy: str = "synthesize") -> ImageBuffer:
    if alpha_policy not in ALPHA_POLICIES:
        raise ValueError(f"alpha_policy must be one of {ALPHA_POLICIES}")
    header = None
    palette = None
    trns = None
    idat = []
    for ctype, body in _chunks(data):
        if ctype == b"IHDR":
            if len(body) != 13:
                raise PNGDecodeError("IHDR must be 13 bytes")
            header = struct.unpack(">IIBBBBB", body)
        elif ctype == b"PLTE":
            if len(body) % 3 or not body:
                raise PNGDecodeError("PLTE length must be a positive multiple of 3")
            palette = np.frombuffer(body, dtype=np.uint8).reshape(-1, 3)
        elif ctype == b"tRNS":
            trns = body
        elif ctype == b"IDAT":
            idat.append(body)
        elif ctype == b"IEND":
            break
        elif header is None:
            raise PNGDecodeError("first chunk must be IHDR")
        elif not ctype[0] & 0x20:
            raise PNGDecodeError(f"unknown critical chunk {ctype!r}")
    if header is None:
        raise PNGDecodeError("missing IHDR")
    width, height, depth, ctype_, comp, filt, interlace = header
    if width == 0 or height == 0:
        raise PNGDecodeError("zero image dimension")
    if ctype_ not in _CHANNELS:
        raise PNGDecodeError(f"invalid colour type {ctype_}")
    if depth not in _DEPTHS[ctype_]:
        raise PNGDecodeError(f"bit depth {depth} invalid for colour type {ctype_}")
    if depth == 16:
        raise UnsupportedBitDepthError("16-bit PNG channels are not supported")
    if comp != 0 or filt != 0 or interlace not in (0, 1):
        raise PNGDecodeError("unsupported compression, filter or interlace method")
    if not idat:
        raise PNGDecodeError("no IDAT chunks")
    if ctype_ == PALETTE and palette is None:
        raise PNGDecodeError("palette image without PLTE")

    has_alpha = ctype_ in (GREY_ALPHA, RGBA) or trns is not None
    if alpha_policy == "require" and not has_alpha:
        raise MissingAlphaError("image has no alpha channel")

    try:
        raw = zlib.decompress(b"".join(idat))
    except zlib.error as exc:
        raise PNGDecodeError(f"corrupt image data: {exc}") from exc

    channels = _CHANNELS[ctype_]
    bpp = max(1, channels * depth // 8)
    samples = np.zeros((height, width, channels), dtype=np.uint8)
    view = memoryview(raw)
    passes = _ADAM7 if interlace else ((0, 0, 1, 1),)
    pos = 0
    for x0, y0, dx, dy in passes:
        pw = (width - x0 + dx - 1) // dx if width > x0 else 0
        ph = (height - y0 + dy - 1) // dy if height > y0 else 0
        if pw == 0 or ph == 0:
            continue
        stride = (pw * channels * depth + 7) // 8
        rows = _unfilter(view[pos:], ph, stride, bpp)
        pos += ph * (stride + 1)
        samples[y0::dy, x0::dx] = _unpack_samples(rows, pw, depth, channels)
    if pos != len(raw):
        raise PNGDecodeError(f"{len(raw) - pos} bytes of trailing image data")

    return ImageBuffer(_to_rgba(samples, ctype_, depth, palette, trns))


def _to_rgba(samples, ctype, depth, palette, trns) -> np.ndarray:
    h, w, _ = samples.shape
    out = np.empty((h, w, 4), dtype=np.uint8)
    if ctype == PALETTE:
        idx = samples[..., 0]
        if idx.max() >= len(palette):
            raise PNGDecodeError("palette index out of range")
        out[..., :3] = palette[idx]
        alpha = np.full(len(palette), 255, dtype=np.uint8)
        if trns is not None:
            t = np.frombuffer(trns, dtype=np.uint8)[: len(palette)]
            alpha[: len(t)] = t
        out[..., 3] = alpha[idx]
        return out

    grey_scale = 255 // ((1 << depth) - 1)  # replicate low-depth grey to 8 bits
    if ctype in (GREY, GREY_ALPHA):
        g = samples[..., 0] * np.uint8(grey_scale)
        out[..., 0] = out[..., 1] = out[..., 2] = g
        out[..., 3] = samples[..., 1] if ctype == GREY_ALPHA else 255
        if ctype == GREY and trns is not None and len(trns) >= 2:
            (key,) = struct.unpack(">H", trns[:2])
            out[..., 3] = np.where(samples[..., 0] == key, 0, 255)
        return out

    out[..., :3] = samples[..., :3]
    out[..., 3] = samples[..., 3] if ctype == RGBA else 255
    if ctype == RGB and trns is not None and len(trns) >= 6:
        key = np.array(struct.unpack(">HHH", trns[:6]))
        out[..., 3] = np.where((samples[..., :3] == key).all(axis=2), 0, 255)
    return out


def _chunk(ctype: bytes, body: bytes) -> bytes:
    return struct.pack(">I", len(body)) + ctype + body + struct.pack(">I", zlib.crc32(ctype + body))


def _filter_rows(px: np.ndarray) -> bytes:
    """Filter each scanline with whichever of None/Sub/Up has the smallest
    sum of absolute signed residuals."""
    h, w, c = px.shape
    rows = px.reshape(h, w * c)
    sub = rows.copy()
    sub[:, c:] = rows[:, c:] - rows[:, :-c]
    up = rows.copy()
    up[1:] = rows[1:] - rows[:-1]
    cands = np.stack([rows, sub, up])
    cost = np.abs(cands.view(np.int8).astype(np.int16)).sum(axis=2)
    choice = cost.argmin(axis=0)
    chosen = cands[choice, np.arange(h)]
    out = np.empty((h, 1 + w * c), dtype=np.uint8)
    out[:, 0] = choice  # 0 None, 1 Sub, 2 Up: indices coincide with filter codes
    out[:, 1:] = chosen
    return out.tobytes()


def encode_png(image: ImageBuffer, compression: int = 6) -> bytes:
    if image.width == 0 or image.height == 0:
        raise ValueError("cannot write a PNG with a zero dimension")
    ihdr = struct.pack(">IIBBBBB", image.width, image.height, 8, RGBA, 0, 0, 0)
    idat = zlib.compress(_filter_rows(image.pixels), compression)
    return SIGNATURE + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", idat) + _chunk(b"IEND", b"")


def load_png(path, alpha_policy: str = "synthesize") -> ImageBuffer:
    with open(path, "rb") as fh:
        return decode_png(fh.read(), alpha_policy)


def save_png(image: ImageBuffer, path, compression: int = 6) -> None:
    data = encode_png(image, compression)
    with open(path, "wb") as fh:
        fh.write(data)
