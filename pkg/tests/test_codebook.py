import dataclasses
import itertools

import pytest
from hypothesis import given, settings, strategies as st

from spikestego import codebook
from spikestego.codebook import CodebookEntry, canonical, derive, validate
from spikestego.errors import (
    CodebookInvariantError,
    CodebookParseError,
    InfeasibleCodebookError,
)

# digit: (pattern, chosen timestamp, remainder, key), typed in independently
# of the package data
EXPECTED_ROWS = {
    1: ((59,), 59, 11, 0),
    2: ((39, 59), 39, 7, 0),
    3: ((31, 45, 59), 45, 13, 1),
    4: ((26, 37, 48, 60), 37, 5, 1),
    5: ((23, 32, 41, 50, 59), 50, 2, 3),
    6: ((20, 28, 36, 44, 52, 59), 44, 12, 3),
    7: ((18, 25, 32, 39, 46, 52, 59), 52, 4, 5),
    8: ((17, 23, 29, 35, 41, 47, 53, 59), 41, 9, 4),
    9: ((15, 21, 26, 32, 37, 43, 48, 54, 59), 54, 6, 7),
}


def _replace(cb, digit, **changes):
    entries = list(cb.entries)
    entries[digit] = dataclasses.replace(entries[digit], **changes)
    return dataclasses.replace(cb, entries=tuple(entries))


def test_canonical_rows():
    cb = canonical()
    for d, (pattern, ts, r, k) in EXPECTED_ROWS.items():
        e = cb[d]
        assert (e.digit, e.pattern, e.chosen_ts, e.remainder, e.key_index) == (d, pattern, ts, r, k)
    assert cb[0] == CodebookEntry(0, (), 0, 0, 0)


def test_canonical_valid():
    assert validate(canonical()) == []


def test_worked_example_digit6():
    e = canonical()[6]
    assert (e.chosen_ts, e.remainder, e.key_index) == (44, 12, 3)


def test_remainder_fault_detected():
    bad = _replace(canonical(), 6, remainder=7)
    v = validate(bad)
    assert any("mod 16" in x for x in v)
    assert any("duplicate remainders [7]" in x for x in v)


def test_out_of_window_fault_detected():
    bad = _replace(canonical(), 4, pattern=(26, 37, 48, 61))
    assert any("position 61 outside window" in x for x in validate(bad))


def test_all_violations_reported():
    bad = _replace(canonical(), 3, remainder=0, key_index=2)
    assert len(validate(bad)) >= 3


def test_derive_from_reference_patterns():
    cb = derive(codebook.REFERENCE_PATTERNS)
    assert validate(cb) == []
    # greedy earliest-feasible choices, worked out by hand
    assert [cb[d].chosen_ts for d in range(1, 10)] == [59, 39, 31, 26, 41, 20, 18, 17, 21]
    assert [cb[d].key_index for d in range(1, 10)] == [0, 0, 0, 0, 2, 0, 0, 0, 1]


def test_derive_infeasible():
    patterns = dict(codebook.REFERENCE_PATTERNS)
    patterns[1] = (16,)
    with pytest.raises(InfeasibleCodebookError) as exc:
        derive(patterns)
    assert exc.value.digit == 1


def test_derive_reports_consumed_remainders():
    patterns = dict(codebook.REFERENCE_PATTERNS)
    patterns[2] = (11, 59)  # both remainder 11, already taken by digit 1
    with pytest.raises(InfeasibleCodebookError) as exc:
        derive(patterns)
    assert exc.value.digit == 2 and exc.value.used_remainders == [11]


def test_derive_missing_digit():
    patterns = {d: p for d, p in codebook.REFERENCE_PATTERNS.items() if d != 5}
    with pytest.raises(CodebookInvariantError):
        derive(patterns)


@st.composite
def feasible_patterns(draw):
    """Random increasing patterns of length d in 0..60."""
    out = {0: ()}
    for d in range(1, 10):
        out[d] = tuple(sorted(draw(st.sets(st.integers(0, 60), min_size=d, max_size=d))))
    return out


@settings(max_examples=200, deadline=None)
@given(feasible_patterns())
def test_successful_derivation_is_valid(patterns):
    try:
        cb = derive(patterns)
    except InfeasibleCodebookError:
        return
    assert validate(cb) == []
    rems = [e.remainder for e in cb.entries]
    assert len(set(rems)) == 10 and rems[0] == 0
    for e in cb.entries[1:]:
        assert e.pattern[e.key_index] == e.chosen_ts


def test_key_space_bound():
    cb = canonical()
    for e in cb.entries[1:]:
        n = len(e.pattern)
        pairs = {(t % 16, k) for k, t in enumerate(e.pattern)}
        space = set(itertools.product(range(16), range(n)))
        assert pairs <= space and len(space) == 16 * n


def test_save_load_roundtrip(tmp_path):
    cb = canonical()
    path = tmp_path / "cb.json"
    codebook.save(cb, path)
    first = path.read_bytes()
    back = codebook.load(path)
    assert back == cb and back.fingerprint == cb.fingerprint
    codebook.save(back, path)
    assert path.read_bytes() == first


def test_file_layout(tmp_path):
    import json

    path = tmp_path / "cb.json"
    codebook.save(canonical(), path)
    doc = json.loads(path.read_text())
    assert list(doc) == ["window_steps", "modulus", "entries", "fingerprint"]
    assert list(doc["entries"][0]) == ["digit", "pattern", "chosen_ts", "remainder", "key_index"]
    assert len(doc["fingerprint"]) == 64


def test_fingerprint_changes_with_content():
    assert derive(codebook.REFERENCE_PATTERNS).fingerprint != canonical().fingerprint


def test_truncated_file(tmp_path):
    path = tmp_path / "cb.json"
    codebook.save(canonical(), path)
    path.write_text(path.read_text()[:100])
    with pytest.raises(CodebookParseError):
        codebook.load(path)


def test_duplicate_remainders_rejected_on_load(tmp_path):
    bad = _replace(canonical(), 6, chosen_ts=37, remainder=5, key_index=2)
    bad = _replace(bad, 6, pattern=(20, 28, 37, 44, 52, 59))
    path = tmp_path / "cb.json"
    path.write_text(codebook.dumps(bad))
    with pytest.raises(CodebookInvariantError, match="duplicate"):
        codebook.load(path)


def test_tampered_fingerprint_rejected(tmp_path):
    text = codebook.dumps(canonical())
    fp = canonical().fingerprint
    with pytest.raises(CodebookInvariantError, match="fingerprint"):
        codebook.loads(text.replace(fp, "0" * 64))
