"""Sample digitization and the spike-timing substitution cipher.

A signed 16-bit sample becomes six digits: a sign digit (0 for +, 1 for -)
followed by the five zero-padded decimal digits of its magnitude.  Each digit
encrypts, through the codebook, to a (symbol, key) pair of nibbles.  The
symbols travel inside the image; the keys travel out of band.

Scalar functions implement the operations one value at a time and are the
reference behaviour.  ``encrypt_samples`` / ``decrypt_samples`` are the
array versions used by the pixel pipeline and must agree with them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .errors import CrossCheckError, LengthMismatchError, NoMatchError, OutOfRangeError

SYMBOLS_PER_SAMPLE = 6
BITS_PER_SAMPLE = 4 * SYMBOLS_PER_SAMPLE
N_MAG_DIGITS = 5
INT16_MIN, INT16_MAX = -32768, 32767
_DECIMAL = frozenset(range(10))


@dataclass(frozen=True)
class SampleDigits:
    sign_digit: int
    mag_digits: tuple

    def as_sequence(self) -> tuple:
        return (self.sign_digit, *self.mag_digits)


@dataclass(frozen=True)
class SymbolBlock:
    symbols: tuple
    keys: tuple


def _check_sample(sample: int) -> int:
    sample = int(sample)
    if not INT16_MIN <= sample <= INT16_MAX:
        raise OutOfRangeError(f"sample {sample} outside signed 16-bit range")
    return sample


def _division_digits(magnitude: int) -> tuple:
    out = []
    for _ in range(N_MAG_DIGITS):
        magnitude, d = divmod(magnitude, 10)
        out.append(d)
    return tuple(reversed(out))


def double_dabble(value: int, n_bits: int = 16, n_digits: int = N_MAG_DIGITS) -> tuple:
    """Binary-to-BCD conversion by shift-and-add-3, MSD first."""
    if not 0 <= value < (1 << n_bits):
        raise OutOfRangeError(f"{value} does not fit in {n_bits} bits")
    mask = (1 << (4 * n_digits)) - 1
    bcd = 0
    for i in range(n_bits - 1, -1, -1):
        for d in range(n_digits):
            if (bcd >> (4 * d)) & 0xF >= 5:
                bcd += 3 << (4 * d)
        bcd = ((bcd << 1) | ((value >> i) & 1)) & mask
    return tuple((bcd >> (4 * d)) & 0xF for d in range(n_digits - 1, -1, -1))


def digitize(sample: int, method: str = "division") -> SampleDigits:
    """Split a signed 16-bit sample into a sign digit and five magnitude digits.

    ``method`` selects repeated division (default) or double-dabble BCD, the
    conversion a hardware digit extractor would use; both give identical
    results.
    """
    sample = _check_sample(sample)
    sign = 1 if sample < 0 else 0
    magnitude = -sample if sign else sample
    if method == "division":
        digits = _division_digits(magnitude)
    elif method == "double_dabble":
        digits = double_dabble(magnitude)
    else:
        raise ValueError(f"unknown digit extraction method {method!r}")
    return SampleDigits(sign, digits)


def undigitize(d: SampleDigits) -> int:
    if d.sign_digit not in (0, 1):
        raise OutOfRangeError(f"sign digit must be 0 or 1, got {d.sign_digit}")
    if len(d.mag_digits) != N_MAG_DIGITS or not _DECIMAL.issuperset(d.mag_digits):
        raise OutOfRangeError(f"magnitude digits must be five decimal digits, got {d.mag_digits}")
    magnitude = 0
    for x in d.mag_digits:
        magnitude = magnitude * 10 + x
    value = -magnitude if d.sign_digit else magnitude
    if not INT16_MIN <= value <= INT16_MAX:
        raise OutOfRangeError(f"digits {d.as_sequence()} decode to {value}, outside int16")
    return value


def encrypt_digit(d: int, cb: Codebook) -> tuple:
    """Return ``(symbol, key)`` for digit ``d``; digit 0 gives ``(0, 0)``."""
    if not 0 <= d <= 9:
        raise OutOfRangeError(f"digit {d} outside 0..9")
    if d == 0:
        return 0, 0
    e = cb.entries[d]
    return e.remainder, e.key_index


def candidate_positions(symbol: int, cb: Codebook) -> tuple:
    """Window positions congruent to ``symbol`` modulo the codebook modulus."""
    return tuple(range(symbol, cb.window_steps, cb.modulus))


def candidate_digits(symbol: int, key: int, cb: Codebook) -> tuple:
    """Digits whose ``key``-th spike lands on a candidate position.

    Can hold more than one digit: with the reference table, symbol 12 and
    key 3 hit both digit 6 (44) and digit 4 (60).
    """
    return cb.candidate_map[symbol, key]


def decrypt_symbol(symbol: int, key: int, cb: Codebook) -> int:
    """Recover a digit from its ciphertext nibble and key nibble.

    The remainder-to-digit bijection gives the answer; the candidate-position
    search must then contain that digit, otherwise the key or the codebook is
    wrong.
    """
    if not (0 <= symbol < 16 and 0 <= key < 16):
        raise OutOfRangeError(f"symbol/key must be nibbles, got ({symbol}, {key})")
    if symbol == 0:
        return 0
    digit = cb.digit_of_remainder_list[symbol]
    if digit < 0:
        raise NoMatchError(f"no digit has remainder {symbol}")
    if digit not in candidate_digits(symbol, key, cb):
        raise CrossCheckError(
            f"symbol {symbol} maps to digit {digit} but key {key} does not select "
            f"a spike at one of {candidate_positions(symbol, cb)}"
        )
    return digit


def encrypt_sample(sample: int, cb: Codebook) -> SymbolBlock:
    symbols, keys = zip(*[encrypt_digit(d, cb) for d in digitize(sample).as_sequence()])
    return SymbolBlock(symbols, keys)


def decrypt_sample(block: SymbolBlock, cb: Codebook) -> int:
    if len(block.symbols) != SYMBOLS_PER_SAMPLE or len(block.keys) != SYMBOLS_PER_SAMPLE:
        raise LengthMismatchError("a symbol block holds exactly six symbols and six keys")
    digits = [decrypt_symbol(s, k, cb) for s, k in zip(block.symbols, block.keys)]
    return undigitize(SampleDigits(digits[0], tuple(digits[1:])))


def pack_symbols(symbols) -> list:
    """Six nibbles to 24 bits, each nibble most-significant bit first."""
    symbols = list(symbols)
    if len(symbols) != SYMBOLS_PER_SAMPLE:
        raise LengthMismatchError(f"expected 6 symbols, got {len(symbols)}")
    bits = []
    for s in symbols:
        if not 0 <= s < 16:
            raise OutOfRangeError(f"symbol {s} is not a nibble")
        bits.extend((s >> shift) & 1 for shift in (3, 2, 1, 0))
    return bits


def unpack_symbols(bits) -> list:
    bits = list(bits)
    if len(bits) != BITS_PER_SAMPLE:
        raise LengthMismatchError(f"expected 24 bits, got {len(bits)}")
    return [
        (bits[i] << 3) | (bits[i + 1] << 2) | (bits[i + 2] << 1) | bits[i + 3]
        for i in range(0, BITS_PER_SAMPLE, 4)
    ]


# Array paths -----------------------------------------------------------------


def digitize_samples(samples) -> np.ndarray:
    """``(n,)`` int16-range samples -> ``(n, 6)`` digit array (sign first)."""
    x = np.asarray(samples, dtype=np.int32)
    if x.size and (x.min() < INT16_MIN or x.max() > INT16_MAX):
        raise OutOfRangeError("samples outside signed 16-bit range")
    out = np.empty(x.shape + (SYMBOLS_PER_SAMPLE,), dtype=np.uint8)
    out[..., 0] = x < 0
    mag = np.abs(x)
    for col in range(SYMBOLS_PER_SAMPLE - 1, 0, -1):
        mag, out[..., col] = np.divmod(mag, 10)
    return out


def encrypt_samples(samples, cb: Codebook) -> tuple:
    """Vectorized :func:`encrypt_sample`: returns ``(symbols, keys)``, each
    ``(n, 6)`` uint8."""
    digits = digitize_samples(samples)
    return cb.remainder_table[digits], cb.key_table[digits]


def decrypt_samples(symbols, keys, cb: Codebook) -> np.ndarray:
    """Vectorized :func:`decrypt_sample` over ``(n, 6)`` symbol/key arrays.

    Errors report the index of the first offending sample.
    """
    symbols = np.asarray(symbols, dtype=np.uint8)
    keys = np.asarray(keys, dtype=np.uint8)
    if symbols.shape != keys.shape or symbols.ndim != 2 or symbols.shape[1] != SYMBOLS_PER_SAMPLE:
        raise LengthMismatchError(
            f"symbols {symbols.shape} and keys {keys.shape} must both be (n, 6)"
        )
    if symbols.size and max(symbols.max(), keys.max()) > 15:
        raise OutOfRangeError("symbols and keys must be nibbles")

    digits = cb.digit_of_remainder[symbols]
    bad = digits < 0
    if bad.any():
        i = int(np.argmax(bad.any(axis=1)))
        raise NoMatchError(
            f"sample {i}: symbol {int(symbols[i][bad[i]][0])} is not any digit's remainder",
            sample_index=i,
        )
    digits = digits.astype(np.intp)

    # candidate check restricted to the looked-up digit: its key-th spike must
    # sit on a position congruent to the symbol
    pos = cb.position_table[digits, keys]
    ok = (digits == 0) | ((pos >= 0) & (pos % cb.modulus == symbols))
    if not ok.all():
        i = int(np.argmax(~ok.all(axis=1)))
        raise CrossCheckError(
            f"sample {i}: key nibbles do not select the chosen spikes", sample_index=i
        )

    sign = digits[:, 0]
    if (sign > 1).any():
        i = int(np.argmax(sign > 1))
        raise OutOfRangeError(f"sample {i}: sign digit {sign[i]} is not 0 or 1")
    mag = np.zeros(len(digits), dtype=np.int64)
    for col in range(1, SYMBOLS_PER_SAMPLE):
        mag = mag * 10 + digits[:, col]
    values = np.where(sign == 1, -mag, mag)
    out_of_range = (values < INT16_MIN) | (values > INT16_MAX)
    if out_of_range.any():
        i = int(np.argmax(out_of_range))
        raise OutOfRangeError(f"sample {i}: digits decode to {values[i]}, outside int16")
    return values.astype(np.int16)
