"""Two-LSB RGBA embedding with a bounded dither pre-pass.

Pixels are visited in row-major order and each one carries 8 payload bits,
two per channel in R, G, B, A order.  Of each bit pair the earlier stream
bit lands in bit 1 and the later one in bit 0.  Before substitution every
touched channel gets a small non-negative offset (saturating at 255), so the
stego value is::

    ((min(v + noise, 255)) & 0b11111100) | pair

An audio sample becomes six 4-bit symbols, i.e. 24 bits, i.e. exactly three
pixels.  The key nibbles and everything else the decoder needs (rate,
channel count, sample count, codebook fingerprint, dither echo) go into a
separate binary *key sidecar*; nothing but ciphertext is written into the
image.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .cipher import SYMBOLS_PER_SAMPLE, decrypt_samples, encrypt_samples
from .codebook import Codebook
from .errors import (
    CodebookMismatchError,
    PayloadTooLargeError,
    SidecarError,
)
from .wav import AudioClip

PIXELS_PER_SAMPLE = 3
PAIRS_PER_SAMPLE = 2 * SYMBOLS_PER_SAMPLE


@dataclass
class ImageBuffer:
    """Row-major 8-bit RGBA pixels held as a ``(height, width, 4)`` array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 4:
            raise ValueError(f"expected (height, width, 4) pixels, got shape {px.shape}")
        if px.dtype != np.uint8:
            raise ValueError(f"expected uint8 pixels, got {px.dtype}")
        self.pixels = np.ascontiguousarray(px)

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> "ImageBuffer":
        if len(data) != width * height * 4:
            raise ValueError(f"{len(data)} bytes cannot hold {width}x{height} RGBA")
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width, 4).copy())

    @classmethod
    def blank(cls, width: int, height: int, fill=0) -> "ImageBuffer":
        return cls(np.full((height, width, 4), fill, dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    def tobytes(self) -> bytes:
        return self.pixels.tobytes()

    def copy(self) -> "ImageBuffer":
        return ImageBuffer(self.pixels.copy())

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)


DITHER_MODES = ("cyclic", "uniform")


@dataclass(frozen=True)
class DitherConfig:
    """``cyclic`` repeats 0, 1, ..., amplitude channel by channel;
    ``uniform`` draws i.i.d. offsets in ``[0, amplitude]`` from ``seed``."""

    mode: str = "cyclic"
    amplitude: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.mode not in DITHER_MODES:
            raise ValueError(f"dither mode must be one of {DITHER_MODES}, got {self.mode!r}")
        if self.amplitude not in (0, 1, 2, 3):
            raise ValueError(f"dither amplitude must be 0..3, got {self.amplitude}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def noise(self, n: int, offset: int = 0) -> np.ndarray:
        """Offsets for channels ``offset .. offset + n - 1`` of the stream.

        Positional, so any slice of the channel stream can be dithered
        independently and still match a sequential pass.
        """
        if self.amplitude == 0:
            return np.zeros(n, dtype=np.uint8)
        if self.mode == "cyclic":
            idx = np.arange(offset, offset + n, dtype=np.int64)
            return (idx % (self.amplitude + 1)).astype(np.uint8)
        rng = np.random.default_rng(self.seed)
        draws = rng.integers(0, self.amplitude + 1, size=offset + n, dtype=np.uint8)
        return draws[offset:]


@dataclass(frozen=True)
class Capacity:
    payload_bytes: int
    max_samples: int

    def max_seconds(self, sample_rate: int, channels: int) -> float:
        """Audio duration that fits at three pixels per sample."""
        return self.max_samples / (sample_rate * channels)

    def raw_seconds(self, sample_rate: int, channels: int) -> float:
        """Duration if every payload byte held raw 16-bit PCM (no cipher overhead)."""
        return self.payload_bytes / (sample_rate * channels * 2)


def capacity(image: ImageBuffer) -> Capacity:
    n = image.n_pixels
    return Capacity(payload_bytes=n, max_samples=n // PIXELS_PER_SAMPLE)


def substitute(values, noise, pairs) -> np.ndarray:
    """Dither then overwrite the two LSBs of each channel value."""
    v = np.asarray(values, dtype=np.uint16) + np.asarray(noise, dtype=np.uint16)
    v = np.minimum(v, 255).astype(np.uint8)
    return (v & 0xFC) | (np.asarray(pairs, dtype=np.uint8) & 0x03)


def embed_pairs(image: ImageBuffer, pairs, dither: DitherConfig) -> ImageBuffer:
    """Write 2-bit values into consecutive channels starting at pixel 0."""
    pairs = np.asarray(pairs, dtype=np.uint8)
    flat = image.pixels.reshape(-1)
    if len(pairs) > flat.size:
        raise PayloadTooLargeError(
            f"{len(pairs)} channel slots needed, image has {flat.size}",
            required=len(pairs),
            available=flat.size,
        )
    out = flat.copy()
    n = len(pairs)
    out[:n] = substitute(flat[:n], dither.noise(n), pairs)
    return ImageBuffer(out.reshape(image.pixels.shape))


def extract_pairs(image: ImageBuffer, n_pairs: int) -> np.ndarray:
    flat = image.pixels.reshape(-1)
    if n_pairs > flat.size:
        raise PayloadTooLargeError(
            f"requested {n_pairs} channel slots, image has {flat.size}",
            required=n_pairs,
            available=flat.size,
        )
    return flat[:n_pairs] & 0x03


def embed_bits(image: ImageBuffer, bits, dither: DitherConfig | None = None) -> ImageBuffer:
    """Embed a bit sequence whose length is a whole number of pixels (8 bits)."""
    bits = np.asarray(bits, dtype=np.uint8).reshape(-1)
    if len(bits) % 8:
        raise ValueError(f"bit count {len(bits)} is not a multiple of 8")
    if bits.size and bits.max() > 1:
        raise ValueError("bits must be 0 or 1")
    if len(bits) > 8 * image.n_pixels:
        raise PayloadTooLargeError(
            f"{len(bits)} bits exceed the {8 * image.n_pixels}-bit capacity",
            required=len(bits),
            available=8 * image.n_pixels,
        )
    pairs = (bits[0::2] << 1) | bits[1::2]
    return embed_pairs(image, pairs, dither or DitherConfig())


def extract_bits(image: ImageBuffer, n_bits: int) -> np.ndarray:
    if n_bits > 8 * image.n_pixels:
        raise PayloadTooLargeError(
            f"requested {n_bits} bits, image holds {8 * image.n_pixels}",
            required=n_bits,
            available=8 * image.n_pixels,
        )
    pairs = extract_pairs(image, (n_bits + 1) // 2)
    bits = np.empty(2 * len(pairs), dtype=np.uint8)
    bits[0::2] = pairs >> 1
    bits[1::2] = pairs & 1
    return bits[:n_bits]


# Key sidecar ------------------------------------------------------------------

SIDECAR_MAGIC = b"SSNK"
SIDECAR_VERSION = 1
_HEADER = struct.Struct("<4sBBIQ32sBBQ")
_MODE_CODES = {"cyclic": 0, "uniform": 1}


@dataclass
class KeySidecar:
    sample_rate: int
    channels: int
    sample_count: int
    fingerprint: bytes
    dither: DitherConfig
    keys: np.ndarray  # flat uint8 nibbles, 6 per sample

    def __post_init__(self):
        self.keys = np.asarray(self.keys, dtype=np.uint8).reshape(-1)
        if len(self.keys) != SYMBOLS_PER_SAMPLE * self.sample_count:
            raise SidecarError(
                f"{len(self.keys)} key nibbles for {self.sample_count} samples"
            )
        if len(self.fingerprint) != 32:
            raise SidecarError("codebook fingerprint must be 32 bytes")

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(
            SIDECAR_MAGIC,
            SIDECAR_VERSION,
            self.channels,
            self.sample_rate,
            self.sample_count,
            self.fingerprint,
            _MODE_CODES[self.dither.mode],
            self.dither.amplitude,
            self.dither.seed,
        )
        keys = self.keys
        if len(keys) % 2:
            keys = np.append(keys, 0).astype(np.uint8)
        packed = (keys[0::2] << 4) | keys[1::2]
        return header + packed.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeySidecar":
        if len(data) < _HEADER.size:
            raise SidecarError(f"sidecar truncated: {len(data)} bytes, header needs {_HEADER.size}")
        magic, version, channels, rate, count, fp, mode, amp, seed = _HEADER.unpack_from(data)
        if magic != SIDECAR_MAGIC:
            raise SidecarError(f"bad sidecar magic {magic!r}")
        if version != SIDECAR_VERSION:
            raise SidecarError(f"unsupported sidecar version {version}")
        modes = {v: k for k, v in _MODE_CODES.items()}
        if mode not in modes:
            raise SidecarError(f"unknown dither mode code {mode}")
        n_keys = SYMBOLS_PER_SAMPLE * count
        need = _HEADER.size + (n_keys + 1) // 2
        if len(data) < need:
            raise SidecarError(f"sidecar truncated: {len(data)} bytes, expected {need}")
        if len(data) > need:
            raise SidecarError(f"sidecar has {len(data) - need} trailing bytes")
        packed = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
        keys = np.empty(2 * len(packed), dtype=np.uint8)
        keys[0::2] = packed >> 4
        keys[1::2] = packed & 0x0F
        try:
            dither = DitherConfig(modes[mode], amp, seed)
        except ValueError as exc:
            raise SidecarError(str(exc)) from exc
        return cls(rate, channels, count, fp, dither, keys[:n_keys])

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "KeySidecar":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


# Audio <-> image ----------------------------------------------------------------


def _symbols_to_pairs(symbols: np.ndarray) -> np.ndarray:
    pairs = np.empty(symbols.shape[:-1] + (PAIRS_PER_SAMPLE,), dtype=np.uint8)
    pairs[..., 0::2] = symbols >> 2
    pairs[..., 1::2] = symbols & 0x03
    return pairs.reshape(-1)


def embed_audio(
    cover: ImageBuffer, audio: AudioClip, cb: Codebook, dither: DitherConfig | None = None
) -> tuple:
    """Hide ``audio`` in ``cover``; returns ``(stego, sidecar)``."""
    dither = dither or DitherConfig()
    n = len(audio.samples)
    need = PIXELS_PER_SAMPLE * n
    if need > cover.n_pixels:
        raise PayloadTooLargeError(
            f"{n} samples need {need} pixels, cover has {cover.n_pixels}",
            required=need,
            available=cover.n_pixels,
        )
    symbols, keys = encrypt_samples(audio.samples, cb)
    stego = embed_pairs(cover, _symbols_to_pairs(symbols), dither)
    sidecar = KeySidecar(
        sample_rate=audio.sample_rate,
        channels=audio.channels,
        sample_count=n,
        fingerprint=cb.fingerprint_bytes,
        dither=dither,
        keys=keys.reshape(-1),
    )
    return stego, sidecar


def extract_audio(stego: ImageBuffer, sidecar: KeySidecar, cb: Codebook) -> AudioClip:
    if sidecar.fingerprint != cb.fingerprint_bytes:
        raise CodebookMismatchError(
            f"sidecar was written with codebook {sidecar.fingerprint.hex()[:16]}..., "
            f"decoder has {cb.fingerprint[:16]}..."
        )
    n = sidecar.sample_count
    if PIXELS_PER_SAMPLE * n > stego.n_pixels:
        raise PayloadTooLargeError(
            f"sidecar declares {n} samples but the image holds at most "
            f"{stego.n_pixels // PIXELS_PER_SAMPLE}",
            required=PIXELS_PER_SAMPLE * n,
            available=stego.n_pixels,
        )
    pairs = extract_pairs(stego, PAIRS_PER_SAMPLE * n).reshape(n, PAIRS_PER_SAMPLE)
    symbols = (pairs[:, 0::2] << 2) | pairs[:, 1::2]
    keys = sidecar.keys.reshape(n, SYMBOLS_PER_SAMPLE)
    samples = decrypt_samples(symbols, keys, cb)
    return AudioClip(sidecar.sample_rate, sidecar.channels, samples)
