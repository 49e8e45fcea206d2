"""Digit codebooks: spike pattern, chosen timestamp, mod-16 remainder, key index.

A codebook is the shared secret between encoder and decoder.  Each digit
1..9 owns a spike pattern inside a 61-step (0..60 ms) window; one spike of
that pattern is the *chosen timestamp*, its remainder modulo 16 is the
ciphertext nibble, and its ordinal position in the pattern is the key
nibble.  Digit 0 has no spikes and encrypts to remainder 0.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import CodebookInvariantError, CodebookParseError, InfeasibleCodebookError

WINDOW_STEPS = 61
MODULUS = 16
N_DIGITS = 10


@dataclass(frozen=True)
class CodebookEntry:
    digit: int
    pattern: tuple
    chosen_ts: int
    remainder: int
    key_index: int

    def to_dict(self) -> dict:
        return {
            "digit": self.digit,
            "pattern": list(self.pattern),
            "chosen_ts": self.chosen_ts,
            "remainder": self.remainder,
            "key_index": self.key_index,
        }


@dataclass(frozen=True)
class Codebook:
    """Ten entries indexed by digit.  Construction does not validate; see
    :func:`validate`."""

    entries: tuple
    window_steps: int = WINDOW_STEPS
    modulus: int = MODULUS

    def __getitem__(self, digit: int) -> CodebookEntry:
        return self.entries[digit]

    def to_dict(self, with_fingerprint: bool = True) -> dict:
        doc = {
            "window_steps": self.window_steps,
            "modulus": self.modulus,
            "entries": [e.to_dict() for e in self.entries],
        }
        if with_fingerprint:
            doc["fingerprint"] = self.fingerprint
        return doc

    @cached_property
    def fingerprint(self) -> str:
        """SHA-256 (hex) of the compact JSON form without the fingerprint."""
        blob = json.dumps(self.to_dict(with_fingerprint=False), separators=(",", ":"))
        return hashlib.sha256(blob.encode("ascii")).hexdigest()

    @property
    def fingerprint_bytes(self) -> bytes:
        return bytes.fromhex(self.fingerprint)

    # Lookup tables for the vectorized cipher paths.

    @cached_property
    def remainder_table(self) -> np.ndarray:
        return np.array([e.remainder for e in self.entries], dtype=np.uint8)

    @cached_property
    def key_table(self) -> np.ndarray:
        return np.array([e.key_index for e in self.entries], dtype=np.uint8)

    @cached_property
    def digit_of_remainder(self) -> np.ndarray:
        """16-slot inverse table; -1 marks remainders no digit uses."""
        inv = np.full(self.modulus, -1, dtype=np.int8)
        for e in self.entries:
            inv[e.remainder] = e.digit
        return inv

    @cached_property
    def digit_of_remainder_list(self) -> tuple:
        return tuple(int(d) for d in self.digit_of_remainder)

    @cached_property
    def candidate_map(self) -> dict:
        """``(symbol, key)`` -> digits whose ``key``-th spike sits at a window
        position congruent to ``symbol``, for every nibble pair."""
        out = {}
        for symbol in range(self.modulus):
            positions = set(range(symbol, self.window_steps, self.modulus))
            for key in range(self.modulus):
                out[symbol, key] = tuple(
                    e.digit
                    for e in self.entries
                    if e.digit > 0 and key < len(e.pattern) and e.pattern[key] in positions
                )
        return out

    @cached_property
    def position_table(self) -> np.ndarray:
        """``position_table[d, k]`` = k-th spike of digit d, or -1."""
        table = np.full((N_DIGITS, MODULUS), -1, dtype=np.int16)
        for e in self.entries:
            n = min(len(e.pattern), MODULUS)
            table[e.digit, :n] = e.pattern[:n]
        return table


_TABLE = (
    # digit, pattern, chosen timestamp, key index
    (0, (), 0, 0),
    (1, (59,), 59, 0),
    (2, (39, 59), 39, 0),
    (3, (31, 45, 59), 45, 1),
    (4, (26, 37, 48, 60), 37, 1),
    (5, (23, 32, 41, 50, 59), 50, 3),
    (6, (20, 28, 36, 44, 52, 59), 44, 3),
    (7, (18, 25, 32, 39, 46, 52, 59), 52, 5),
    (8, (17, 23, 29, 35, 41, 47, 53, 59), 41, 4),
    (9, (15, 21, 26, 32, 37, 43, 48, 54, 59), 54, 7),
)

REFERENCE_PATTERNS = {d: pattern for d, pattern, _, _ in _TABLE}


def canonical() -> Codebook:
    """The reference codebook every encoder and decoder ships with."""
    return _CANONICAL


_CANONICAL = Codebook(
    tuple(CodebookEntry(d, p, ts, ts % MODULUS, k) for d, p, ts, k in _TABLE)
)


def derive(patterns: Mapping[int, Sequence[int]]) -> Codebook:
    """Build a codebook from per-digit patterns by greedy selection.

    Digits 1..9 are visited in order; each takes its earliest spike whose
    remainder is nonzero and not yet claimed.  ``patterns`` values may be
    plain integer sequences or :class:`~spikestego.lif.SpikeTrain` objects.
    """
    if len(tuple(patterns.get(0, ()))) != 0:
        raise CodebookInvariantError(["digit 0 pattern must be empty"])
    missing = [d for d in range(1, N_DIGITS) if d not in patterns]
    if missing:
        raise CodebookInvariantError([f"no pattern for digits {missing}"])
    used = {0}
    entries = [CodebookEntry(0, (), 0, 0, 0)]
    for digit in range(1, N_DIGITS):
        pattern = tuple(int(t) for t in patterns[digit])
        for index, ts in enumerate(pattern):
            r = ts % MODULUS
            if r not in used and index < MODULUS:
                used.add(r)
                entries.append(CodebookEntry(digit, pattern, ts, r, index))
                break
        else:
            raise InfeasibleCodebookError(digit, used - {0})
    cb = Codebook(tuple(entries))
    violations = validate(cb)
    if violations:
        raise CodebookInvariantError(violations)
    return cb


def validate(cb: Codebook) -> list:
    """Return every invariant violation found; an empty list means valid."""
    out = []
    if cb.modulus != MODULUS:
        out.append(f"modulus is {cb.modulus}, expected {MODULUS}")
    if cb.window_steps != WINDOW_STEPS:
        out.append(f"window_steps is {cb.window_steps}, expected {WINDOW_STEPS}")
    digits = [e.digit for e in cb.entries]
    if digits != list(range(N_DIGITS)):
        out.append(f"entries must cover digits 0..9 in order, got {digits}")

    for e in cb.entries:
        tag = f"digit {e.digit}"
        if not 0 <= e.remainder < MODULUS:
            out.append(f"{tag}: remainder {e.remainder} outside 0..15")
        if not 0 <= e.key_index < MODULUS:
            out.append(f"{tag}: key_index {e.key_index} outside 0..15")
        if e.remainder != e.chosen_ts % MODULUS:
            out.append(
                f"{tag}: remainder {e.remainder} != chosen_ts {e.chosen_ts} mod {MODULUS}"
            )
        if len(e.pattern) != e.digit:
            out.append(f"{tag}: pattern has {len(e.pattern)} spikes")
        for t in e.pattern:
            if not 0 <= t < cb.window_steps:
                out.append(f"{tag}: position {t} outside window 0..{cb.window_steps - 1}")
        if list(e.pattern) != sorted(set(e.pattern)):
            out.append(f"{tag}: pattern not strictly increasing")
        if e.digit == 0:
            if e.pattern or e.chosen_ts != 0 or e.remainder != 0:
                out.append(f"{tag}: must have empty pattern, chosen_ts 0, remainder 0")
        elif e.digit > 0:
            if e.remainder == 0:
                out.append(f"{tag}: remainder must be nonzero")
            if not (0 <= e.key_index < len(e.pattern) and e.pattern[e.key_index] == e.chosen_ts):
                out.append(f"{tag}: pattern[key_index={e.key_index}] != chosen_ts {e.chosen_ts}")

    remainders = [e.remainder for e in cb.entries]
    dupes = sorted({r for r in remainders if remainders.count(r) > 1})
    if dupes:
        out.append(f"duplicate remainders {dupes}")
    return out


def dumps(cb: Codebook) -> str:
    return json.dumps(cb.to_dict(), indent=2) + "\n"


def loads(text: str) -> Codebook:
    try:
        doc = json.loads(text)
        entries = tuple(
            CodebookEntry(
                digit=int(e["digit"]),
                pattern=tuple(int(t) for t in e["pattern"]),
                chosen_ts=int(e["chosen_ts"]),
                remainder=int(e["remainder"]),
                key_index=int(e["key_index"]),
            )
            for e in doc["entries"]
        )
        cb = Codebook(entries, int(doc["window_steps"]), int(doc["modulus"]))
        stored = doc.get("fingerprint")
    except (ValueError, KeyError, TypeError) as exc:
        raise CodebookParseError(f"malformed codebook JSON: {exc}") from exc

    violations = validate(cb)
    if stored is not None and stored != cb.fingerprint:
        violations.append("stored fingerprint does not match content")
    if violations:
        raise CodebookInvariantError(violations)
    return cb


def save(cb: Codebook, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(cb))


def load(path) -> Codebook:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise CodebookParseError(f"cannot read codebook {path}: {exc}") from exc
    return loads(text)
