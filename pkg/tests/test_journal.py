"""Journal file format and integrity checks."""

import pytest

from suba.errors import JournalError
from suba.journal import Journal, TrialEvent


def test_append_and_reload(tmp_path):
    path = tmp_path / "t.jsonl"
    j = Journal(path)
    j.append("trial_created", {"trial_id": "x", "config": {}})
    j.append("patient_enrolled", {"patient_id": 0, "biomarkers": [0.1]})
    j.close()
    j2 = Journal(path)
    assert [e.seq for e in j2.events] == [1, 2]
    assert j2.events[1].payload["biomarkers"] == [0.1]
    assert j2.last_seq == 2
    j2.append("arm_assigned", {"patient_id": 0, "arm": 1})
    assert j2.last_seq == 3


def test_since_filter(tmp_path):
    j = Journal(tmp_path / "t.jsonl")
    for i in range(4):
        j.append("outcome_recorded", {"patient_id": i, "y": 1})
    assert [e.seq for e in j.since(2)] == [3, 4]
    assert j.since(4) == []


def test_sequence_gap_detected(tmp_path):
    path = tmp_path / "gap.jsonl"
    e1 = TrialEvent(1, "t", "trial_created", {})
    e3 = TrialEvent(3, "t", "outcome_recorded", {})
    path.write_text(e1.to_json() + "\n" + e3.to_json() + "\n")
    with pytest.raises(JournalError):
        Journal(path)


def test_corrupt_line_detected(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"v": 1, "seq": 1, not json\n')
    with pytest.raises(JournalError):
        Journal(path)


def test_unknown_kind_rejected(tmp_path):
    path = tmp_path / "kind.jsonl"
    path.write_text(TrialEvent(1, "t", "trial_created", {}).to_json().replace(
        "trial_created", "mystery_event") + "\n")
    with pytest.raises(JournalError):
        Journal(path)


def test_schema_version_checked(tmp_path):
    path = tmp_path / "v.jsonl"
    path.write_text('{"v": 99, "seq": 1, "ts": "t", "kind": "trial_created", "payload": {}}\n')
    with pytest.raises(JournalError):
        Journal(path)


def test_substance_ignores_timestamp():
    a = TrialEvent(1, "2020-01-01T00:00:00", "arm_assigned", {"arm": 1})
    b = TrialEvent(1, "2021-06-06T06:06:06", "arm_assigned", {"arm": 1})
    assert a.substance() == b.substance()
    c = TrialEvent(1, "2020-01-01T00:00:00", "arm_assigned", {"arm": 2})
    assert a.substance() != c.substance()
