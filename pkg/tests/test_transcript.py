"""Canonical transcript serialization: byte determinism, recursive float
rounding, and the parse-back inverse."""

import math

import pytest

from vrguide.transcript import (EVENT, KINDS, SESSION_END, SESSION_START,
                                Transcript, TranscriptEntry, USER_QUERY,
                                canonical_value, entries_to_ndjson,
                                parse_transcript)


def sample_entries():
    return [
        TranscriptEntry(0.0, SESSION_START, {"scene": "town",
                                             "persona": "human"}),
        TranscriptEntry(0.1 + 0.2, USER_QUERY, {"text": "Where am I?"}),
        TranscriptEntry(1.2345678, EVENT, {"kind": "user_footstep",
                                           "source": [0.0, 0.0, 0.7],
                                           "detail": {"count": 1}}),
        TranscriptEntry(2.0, SESSION_END, {"reason": "quit"}),
    ]


def test_round_trip_preserves_canonical_entries():
    text = entries_to_ndjson(sample_entries())
    parsed = parse_transcript(text)
    assert entries_to_ndjson(parsed) == text
    assert [e.kind for e in parsed] == [SESSION_START, USER_QUERY, EVENT,
                                        SESSION_END]
    assert parsed[1].t == pytest.approx(0.3)


def test_serialization_is_byte_deterministic():
    first = entries_to_ndjson(sample_entries())
    second = entries_to_ndjson(sample_entries())
    assert first == second
    assert first.endswith("\n")
    assert first.count("\n") == 4


def test_floats_round_to_six_decimals_recursively():
    value = canonical_value({"a": 0.12345678, "b": [1.00000049, {"c": -0.0}]})
    assert value == {"a": 0.123457, "b": [1.0, {"c": 0.0}]}


def test_integers_and_bools_survive_untouched():
    value = canonical_value({"n": 3, "flag": True, "nothing": None})
    assert value == {"n": 3, "flag": True, "nothing": None}
    assert isinstance(value["n"], int) and not isinstance(value["n"], bool)


def test_keys_sorted_and_compact():
    entry = TranscriptEntry(0.0, EVENT, {"zeta": 1, "alpha": 2})
    line = entry.to_json()
    assert line.index('"alpha"') < line.index('"zeta"')
    assert ", " not in line and ": " not in line


def test_non_finite_and_unserializable_rejected():
    with pytest.raises(ValueError):
        canonical_value(math.nan)
    with pytest.raises(ValueError):
        canonical_value(math.inf)
    with pytest.raises(TypeError):
        canonical_value({"x": object()})
    with pytest.raises(TypeError):
        canonical_value({1: "non-string key"})


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        TranscriptEntry(0.0, "telemetry", {})
    assert "telemetry" not in KINDS


def test_parse_rejects_malformed_lines():
    with pytest.raises(ValueError):
        parse_transcript("not json\n")
    with pytest.raises(ValueError):
        parse_transcript('{"t": 0.0, "kind": "event"}\n')


def test_transcript_accumulator_and_save(tmp_path):
    transcript = Transcript()
    transcript.add(0.0, SESSION_START, {"scene": "town"})
    transcript.add(1.0, SESSION_END, {"reason": "quit"})
    path = tmp_path / "run.ndjson"
    transcript.save(path)
    assert path.read_text(encoding="utf-8") == transcript.to_ndjson()
    assert len(transcript.entries) == 2
