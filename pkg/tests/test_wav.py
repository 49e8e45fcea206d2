import io
import struct
import wave

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spikestego import wav
from spikestego.errors import MalformedRiffError, UnsupportedFormatError
from spikestego.wav import AudioClip


def _stdlib_wav(samples, rate, channels, width=2):
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(rate)
        w.writeframes(np.asarray(samples, dtype=f"<i{width}").tobytes() if width != 3 else samples)
    return buf.getvalue()


def _riff(fmt_body, data, extra=b""):
    chunks = b"fmt " + struct.pack("<I", len(fmt_body)) + fmt_body + extra
    chunks += b"data" + struct.pack("<I", len(data)) + data
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks


def test_eight_sample_mono():
    s = [0, 1, -1, 32767, -32768, 12345, -12345, 7]
    data = _stdlib_wav(s, 48000, 1)
    clip = wav.decode_wav(data)
    assert clip.sample_rate == 48000 and clip.channels == 1
    assert clip.samples.tolist() == s
    assert wav.encode_wav(clip) == data


def test_stereo_interleaving_matches_stdlib(rng):
    s = rng.integers(-32768, 32768, 200)
    clip = wav.decode_wav(_stdlib_wav(s, 44100, 2))
    assert clip.n_frames == 100
    with wave.open(io.BytesIO(wav.encode_wav(clip))) as w:
        assert (w.getnchannels(), w.getframerate(), w.getnframes()) == (2, 44100, 100)
        assert np.frombuffer(w.readframes(100), "<i2").tolist() == s.tolist()


def test_24bit_rejected():
    with pytest.raises(UnsupportedFormatError):
        wav.decode_wav(_stdlib_wav(bytes(9), 48000, 1, width=3))


def test_float_rejected():
    fmt = struct.pack("<HHIIHH", 3, 1, 48000, 48000 * 4, 4, 32)
    with pytest.raises(UnsupportedFormatError):
        wav.decode_wav(_riff(fmt, bytes(8)))


def test_three_channels_rejected():
    with pytest.raises(UnsupportedFormatError):
        wav.decode_wav(_stdlib_wav(np.zeros(6), 8000, 3))


def _extensible(guid):
    base = struct.pack("<HHIIHH", 0xFFFE, 2, 22050, 22050 * 4, 4, 16)
    return base + struct.pack("<HHI", 22, 16, 3) + guid


def test_extensible_pcm_accepted():
    pcm = struct.pack("<4h", 1, -2, 3, -4)
    clip = wav.decode_wav(_riff(_extensible(wav._PCM_GUID), pcm))
    assert clip.channels == 2 and clip.samples.tolist() == [1, -2, 3, -4]


def test_extensible_float_rejected():
    float_guid = struct.pack("<IHH", 3, 0, 0x10) + bytes.fromhex("800000aa00389b71")
    with pytest.raises(UnsupportedFormatError):
        wav.decode_wav(_riff(_extensible(float_guid), bytes(8)))


def test_skips_unknown_chunks():
    fmt = struct.pack("<HHIIHH", 1, 1, 8000, 16000, 2, 16)
    data = _riff(fmt, struct.pack("<2h", 5, -5), extra=b"LIST" + struct.pack("<I", 3) + b"abc\x00")
    assert wav.decode_wav(data).samples.tolist() == [5, -5]


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d[:30],                       # truncated fmt
        lambda d: b"RIFX" + d[4:],              # wrong container
        lambda d: d[:-1],                       # data chunk short by a byte
        lambda d: d[:36],                       # no data chunk
        lambda d: d[:12] + d[36:],              # no fmt chunk
    ],
)
def test_malformed_riff(mutate):
    good = _stdlib_wav([1, 2, 3, 4], 8000, 1)
    with pytest.raises(MalformedRiffError):
        wav.decode_wav(mutate(good))


def test_partial_frame_rejected():
    fmt = struct.pack("<HHIIHH", 1, 2, 8000, 32000, 4, 16)
    with pytest.raises(MalformedRiffError):
        wav.decode_wav(_riff(fmt, bytes(6)))


def test_bad_block_align():
    fmt = struct.pack("<HHIIHH", 1, 2, 8000, 32000, 2, 16)
    with pytest.raises(MalformedRiffError):
        wav.decode_wav(_riff(fmt, bytes(8)))


def test_clip_validation():
    with pytest.raises(ValueError):
        AudioClip(8000, 2, [1, 2, 3])
    with pytest.raises(ValueError):
        AudioClip(8000, 1, [40000])
    with pytest.raises(ValueError):
        AudioClip(8000, 3, [1, 2, 3])


@settings(max_examples=100, deadline=None)
@given(n=st.integers(0, 500), ch=st.sampled_from([1, 2]),
       rate=st.sampled_from([8000, 22050, 44100, 48000, 96000]), seed=st.integers(0, 2**32))
def test_random_roundtrip(n, ch, rate, seed):
    s = np.random.default_rng(seed).integers(-32768, 32768, n * ch)
    clip = AudioClip(rate, ch, s)
    assert wav.decode_wav(wav.encode_wav(clip)) == clip


def test_file_roundtrip(tmp_path, rng):
    clip = AudioClip(48000, 2, rng.integers(-32768, 32768, 96))
    wav.save_wav(clip, tmp_path / "a.wav")
    assert wav.load_wav(tmp_path / "a.wav") == clip
