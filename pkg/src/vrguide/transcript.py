"""Session transcripts as canonical newline-delimited JSON.

Canonical means byte-reproducible: keys sorted, compact separators, floats
rounded to six decimals recursively, and no NaN or infinity. Two runs of the
same deterministic session must produce identical transcript bytes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

SESSION_START = "session_start"
USER_QUERY = "user_query"
GUIDE_RESPONSE = "guide_response"
ACTION = "action"
EVENT = "event"
PERSONA_CHANGED = "persona_changed"
ERROR = "error"
SESSION_END = "session_end"

KINDS = frozenset({SESSION_START, USER_QUERY, GUIDE_RESPONSE, ACTION, EVENT,
                   PERSONA_CHANGED, ERROR, SESSION_END})

FLOAT_DECIMALS = 6


def canonical_value(value):
    """Recursively normalize a JSON-able value for byte-stable output."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"transcript values must be finite, got {value!r}")
        rounded = round(value, FLOAT_DECIMALS)
        return 0.0 if rounded == 0.0 else rounded
    if isinstance(value, dict):
        out = {}
        for key, item in value.items():
            if not isinstance(key, str):
                raise TypeError(f"transcript keys must be strings, got {key!r}")
            out[key] = canonical_value(item)
        return out
    if isinstance(value, (list, tuple)):
        return [canonical_value(item) for item in value]
    raise TypeError(f"value {value!r} is not transcript-serializable")


@dataclass(frozen=True)
class TranscriptEntry:
    t: float
    kind: str
    payload: dict

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown transcript kind {self.kind!r}")

    def to_json(self) -> str:
        record = {"t": canonical_value(float(self.t)), "kind": self.kind,
                  "payload": canonical_value(self.payload)}
        return json.dumps(record, sort_keys=True, separators=(",", ":"),
                          ensure_ascii=False, allow_nan=False)


def entries_to_ndjson(entries) -> str:
    return "".join(entry.to_json() + "\n" for entry in entries)


def parse_transcript(text: str) -> list[TranscriptEntry]:
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"transcript line {lineno} is not JSON: {exc}") from exc
        if not isinstance(record, dict) or set(record) != {"t", "kind", "payload"}:
            raise ValueError(f"transcript line {lineno} has wrong shape")
        entries.append(TranscriptEntry(t=float(record["t"]),
                                       kind=record["kind"],
                                       payload=record["payload"]))
    return entries


class Transcript:
    """Append-only entry log with canonical NDJSON output."""

    def __init__(self):
        self._entries: list[TranscriptEntry] = []

    def add(self, t: float, kind: str, payload: dict) -> TranscriptEntry:
        entry = TranscriptEntry(t=t, kind=kind, payload=payload)
        self._entries.append(entry)
        return entry

    @property
    def entries(self) -> tuple[TranscriptEntry, ...]:
        return tuple(self._entries)

    def to_ndjson(self) -> str:
        return entries_to_ndjson(self._entries)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(self.to_ndjson())
