"""Append-only JSON-lines event persistence.

One file per session. Every acknowledged state change is appended (and
flushed) before the caller replies, so a crash between events loses at
most the event that was never acknowledged; a trailing half-written
line is ignored on load.
"""

import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone

from .errors import ValidationError


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    data: dict
    at: str
    request_id: str = None

    def to_dict(self):
        out = {"seq": self.seq, "kind": self.kind, "at": self.at,
               "data": self.data}
        if self.request_id is not None:
            out["request_id"] = self.request_id
        return out

    @staticmethod
    def from_dict(raw):
        return Event(
            seq=raw["seq"],
            kind=raw["kind"],
            data=raw["data"],
            at=raw["at"],
            request_id=raw.get("request_id"),
        )


def _now():
    return datetime.now(timezone.utc).isoformat()


class EventLog:
    """File-backed event stream for one session."""

    def __init__(self, path):
        self.path = path
        self._next_seq = len(self.read())

    def read(self):
        return read_events(self.path)

    def append(self, kind, data, request_id=None, at=None) -> Event:
        event = Event(
            seq=self._next_seq,
            kind=kind,
            data=data,
            at=at or _now(),
            request_id=request_id,
        )
        line = json.dumps(event.to_dict(), sort_keys=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self._next_seq += 1
        return event


def read_events(path):
    """Load a log, ignoring a torn trailing line (crash artifact)."""
    if not os.path.exists(path):
        return []
    events = []
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    for i, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                break  # torn tail from a mid-write crash
            raise ValidationError(f"{path}: corrupt event at line {i + 1}")
        events.append(Event.from_dict(raw))
    for seq, event in enumerate(events):
        if event.seq != seq:
            raise ValidationError(
                f"{path}: event sequence gap at line {seq + 1}"
            )
    return events
