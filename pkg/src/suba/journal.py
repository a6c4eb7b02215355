"""Append-only trial event journal (one JSON object per line).

Every state transition of a live trial is an event with a contiguous
sequence number. The journal is the source of truth: replaying it through
a fresh engine reconstructs the trial exactly, and replay re-derives every
decision (assignments, drops, stops) and verifies it against the recorded
event, so journal corruption or nondeterminism cannot pass silently.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import JournalError

SCHEMA_VERSION = 1

EVT_CREATED = "trial_created"
EVT_ENROLLED = "patient_enrolled"
EVT_ASSIGNED = "arm_assigned"
EVT_OUTCOME = "outcome_recorded"
EVT_DROPPED = "arm_dropped"
EVT_STOPPED = "trial_stopped"

EVENT_KINDS = (
    EVT_CREATED,
    EVT_ENROLLED,
    EVT_ASSIGNED,
    EVT_OUTCOME,
    EVT_DROPPED,
    EVT_STOPPED,
)


@dataclass(frozen=True)
class TrialEvent:
    seq: int
    ts: str
    kind: str
    payload: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "v": SCHEMA_VERSION,
                "seq": self.seq,
                "ts": self.ts,
                "kind": self.kind,
                "payload": self.payload,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "TrialEvent":
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise JournalError(f"corrupt journal line: {line[:80]!r}") from exc
        if raw.get("v") != SCHEMA_VERSION:
            raise JournalError(f"unsupported journal schema {raw.get('v')!r}")
        if raw.get("kind") not in EVENT_KINDS:
            raise JournalError(f"unknown event kind {raw.get('kind')!r}")
        return cls(
            seq=int(raw["seq"]), ts=raw["ts"], kind=raw["kind"], payload=raw["payload"]
        )

    def substance(self) -> tuple:
        """Identity used for replay verification: everything but the clock."""
        return (self.seq, self.kind, json.dumps(self.payload, sort_keys=True))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class Journal:
    """Append-only event log for one trial, flushed to disk per append."""

    def __init__(self, path: Path | str):
        self.path = Path(path)
        self.events: list[TrialEvent] = []
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self.events.append(TrialEvent.from_json(line))
            self._verify_contiguous()
        self._fh = open(self.path, "a", encoding="utf-8")

    def _verify_contiguous(self) -> None:
        for i, event in enumerate(self.events):
            if event.seq != i + 1:
                raise JournalError(
                    f"journal {self.path} has sequence gap at position {i}"
                )

    @property
    def last_seq(self) -> int:
        return self.events[-1].seq if self.events else 0

    def append(self, kind: str, payload: dict, ts: str | None = None) -> TrialEvent:
        event = TrialEvent(
            seq=self.last_seq + 1, ts=ts or _now(), kind=kind, payload=payload
        )
        self._fh.write(event.to_json() + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())
        self.events.append(event)
        return event

    def since(self, seq: int) -> list[TrialEvent]:
        return [e for e in self.events if e.seq > seq]

    def close(self) -> None:
        self._fh.close()

    def content_hash(self) -> int:
        return hash(tuple(e.substance() for e in self.events))
