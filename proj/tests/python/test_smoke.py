from datetime import datetime, timezone
import json
import math
import os
from pathlib import Path

import pytest

import unusual_events as ue

FIXTURES = Path(os.environ.get("UNUSUAL_FIXTURE_DIR", Path(__file__).resolve().parents[1] / "fixtures"))


def test_catalog():
    types = ue.event_types()
    assert len(types) == 151
    assert len(set(types)) == 151
    assert set(ue.useful_event_types()) <= set(types)
    assert "commit/loc_modified/project" in ue.useful_event_types()


def test_summary_fences():
    s = ue.summarize([0, 1, 1, 2, 3, 4, 13])
    assert (s.q1, s.median, s.q3) == (1.0, 2.0, 3.5)
    assert s.upper_fence == 11.0
    assert ue.summarize([5.0] * 12, k=1.5).iqr == 0.0


def test_odds_ratio():
    r = ue.odds_ratio(20, 10, 5, 25)
    assert r.odds_ratio == 10.0
    assert r.ci_low < 10.0 < r.ci_high
    assert not r.corrected
    z = ue.odds_ratio(0, 10, 5, 25)
    assert z.corrected and math.isfinite(z.odds_ratio)


def test_qualification():
    assert ue.qualifies_for_sample(509, 0, 100)[0]
    ok, reason = ue.qualifies_for_sample(499, 5000, 0)
    assert not ok and reason


def test_empty_snapshot():
    snap = ue.load_snapshot(FIXTURES / "empty.snapshot.jsonl")
    assert snap.commit_count == 0
    assert ue.detect(snap, min_group_size=2) == []
    rows = ue.frequency_report([], snap)
    assert len(rows) == 151
    assert all(r["count"] == 0 for r in rows)


def test_missing_snapshot():
    with pytest.raises(Exception):
        ue.load_snapshot(FIXTURES / "absent.jsonl")


def test_detect_through_cli_matches_binding(tmp_path):
    # Issues open for 0.1 .. 70 days; only the 70-day one is beyond the fence.
    lines = [json.dumps({"schema": "unusual-events/1"})]
    meta = {"kind": "meta", "owner": "o", "name": "n", "default_branch": "main", "default_branch_head": "",
            "fetched_at": "2017-01-01T00:00:00Z", "external_parent_shas": []}
    lines.append(json.dumps(meta))
    hours = [2.4, 12, 21.74, 48, 111.6, 240, 388.8, 480, 1680]
    for n, h in enumerate(hours, start=1):
        closed = 1451606400 + round(h * 3600)
        lines.append(json.dumps({
            "kind": "issue", "number": n, "title": "t", "body": "", "creator_id": "u",
            "assignee_ids": [], "labels": [], "created_at": "2016-01-01T00:00:00Z",
            "closed_at": datetime.fromtimestamp(closed, timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            "comment_count": 0, "linked_default_branch_commit_shas": [],
        }))
    path = tmp_path / "issues.snapshot.jsonl"
    path.write_text("\n".join(lines) + "\n")

    snap = ue.load_snapshot(path)
    events = ue.detect(snap, min_group_size=2, types=["issue/days_open_to_closed/project"])
    assert [e.artifact_id for e in events] == ["9"]
    e = events[0]
    assert e.direction == "high"
    assert e.summary.upper_fence == pytest.approx(62.08, abs=0.01)
    assert e.message().startswith("This issue is an outlier in terms of ")
    assert ue.Event.from_json(e.to_json()) == e

    code, out, err = ue.run_cli(["detect", str(path), "--min-group-size", "2",
                                 "--types", "issue/days_open_to_closed/project"])
    assert code == 0, err
    assert out.splitlines() == [e.to_json()]


def test_bad_arguments():
    with pytest.raises(ValueError):
        ue.detect(ue.load_snapshot(FIXTURES / "empty.snapshot.jsonl"), types=["commit/nothing/project"])
    code, _, _ = ue.run_cli(["detect"])
    assert code == 1
