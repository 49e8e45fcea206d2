"""16-bit PCM WAV reading and writing.

Only little-endian RIFF/WAVE with 16-bit integer PCM in one or two channels
is accepted.  WAVE_FORMAT_EXTENSIBLE headers are fine as long as their
sub-format GUID is PCM.  Anything else raises rather than being converted.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import MalformedRiffError, UnsupportedFormatError

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_EXTENSIBLE = 0xFFFE
# KSDATAFORMAT_SUBTYPE_PCM, as stored on disk
_PCM_GUID = struct.pack("<IHH", 0x00000001, 0x0000, 0x0010) + bytes.fromhex("800000aa00389b71")


@dataclass
class AudioClip:
    sample_rate: int
    channels: int
    samples: np.ndarray  # interleaved int16

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.dtype != np.int16:
            if samples.size and (samples.min() < -32768 or samples.max() > 32767):
                raise ValueError("samples outside signed 16-bit range")
            samples = samples.astype(np.int16)
        self.samples = samples.reshape(-1)
        if self.channels not in (1, 2):
            raise ValueError(f"channels must be 1 or 2, got {self.channels}")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if len(self.samples) % self.channels:
            raise ValueError("sample count not divisible by channel count")

    @property
    def n_frames(self) -> int:
        return len(self.samples) // self.channels

    @property
    def duration(self) -> float:
        return self.n_frames / self.sample_rate

    def __eq__(self, other):
        if not isinstance(other, AudioClip):
            return NotImplemented
        return (
            self.sample_rate == other.sample_rate
            and self.channels == other.channels
            and np.array_equal(self.samples, other.samples)
        )


def _parse_fmt(body: bytes) -> tuple:
    if len(body) < 16:
        raise MalformedRiffError("fmt chunk shorter than 16 bytes")
    tag, channels, rate, byte_rate, block_align, bits = struct.unpack_from("<HHIIHH", body)
    if tag == WAVE_FORMAT_EXTENSIBLE:
        if len(body) < 40:
            raise MalformedRiffError("extensible fmt chunk shorter than 40 bytes")
        cb_size, valid_bits, _mask = struct.unpack_from("<HHI", body, 16)
        if body[24:40] != _PCM_GUID:
            raise UnsupportedFormatError("extensible WAV with non-PCM sub-format")
        if valid_bits not in (0, bits):
            raise UnsupportedFormatError(f"{valid_bits} valid bits in a {bits}-bit container")
    elif tag != WAVE_FORMAT_PCM:
        kind = {3: "IEEE float", 6: "A-law", 7: "mu-law"}.get(tag, f"format tag {tag:#x}")
        raise UnsupportedFormatError(f"{kind} WAV is not supported, need 16-bit PCM")
    if bits != 16:
        raise UnsupportedFormatError(f"{bits}-bit PCM is not supported, need 16-bit")
    if channels not in (1, 2):
        raise UnsupportedFormatError(f"{channels} channels not supported, need 1 or 2")
    if rate == 0:
        raise MalformedRiffError("sample rate is zero")
    if block_align != 2 * channels:
        raise MalformedRiffError(f"block align {block_align} inconsistent with {channels}ch 16-bit")
    return channels, rate


def decode_wav(data: bytes) -> AudioClip:
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedRiffError("not a RIFF/WAVE file")
    fmt = None
    pcm = None
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise MalformedRiffError(f"chunk {cid!r} truncated ({len(body)} of {size} bytes)")
        if cid == b"fmt ":
            fmt = _parse_fmt(body)
        elif cid == b"data":
            pcm = body
        pos += 8 + size + (size & 1)
    if fmt is None:
        raise MalformedRiffError("missing fmt chunk")
    if pcm is None:
        raise MalformedRiffError("missing data chunk")
    channels, rate = fmt
    if len(pcm) % (2 * channels):
        raise MalformedRiffError("data chunk is not a whole number of frames")
    samples = np.frombuffer(pcm, dtype="<i2").astype(np.int16)
    return AudioClip(rate, channels, samples)


def encode_wav(clip: AudioClip) -> bytes:
    pcm = clip.samples.astype("<i2").tobytes()
    fmt = struct.pack(
        "<HHIIHH",
        WAVE_FORMAT_PCM,
        clip.channels,
        clip.sample_rate,
        clip.sample_rate * clip.channels * 2,
        clip.channels * 2,
        16,
    )
    return b"".join(
        [
            b"RIFF",
            struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(pcm)),
            b"WAVE",
            b"fmt ",
            struct.pack("<I", len(fmt)),
            fmt,
            b"data",
            struct.pack("<I", len(pcm)),
            pcm,
        ]
    )


def load_wav(path) -> AudioClip:
    with open(path, "rb") as fh:
        return decode_wav(fh.read())


def save_wav(clip: AudioClip, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_wav(clip))
