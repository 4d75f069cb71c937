"""Tests for lasco_engine.distsim.buffers."""

import logging

from lasco_engine.distsim.buffers import DuplicateReportBuffer, TimeReorderBuffer
from lasco_engine.distsim.trace import Report
from lasco_engine.history.model import ObjectSnapshot, SystemEvent


def _snapshot(object_id: str, time: int, **attrs) -> ObjectSnapshot:
    return ObjectSnapshot(object_id=object_id, time=time, attrs=attrs)


def _event(event_id: str, time: int, src: str = "a", dst: str = "b", **attrs) -> SystemEvent:
    return SystemEvent(event_id=event_id, src=src, dst=dst, time=time, attrs=attrs)


class TestTimeReorderBuffer:
    def test_releases_in_time_order(self):
        buffer = TimeReorderBuffer()
        for arrival, record in enumerate([_event("e3", 3), _event("e1", 1), _snapshot("a", 2)]):
            buffer.push(Report(record, "d1", arrival))
        assert buffer.next_time() == 1
        assert [r.time for r in buffer.release(2)] == [1, 2]
        assert len(buffer) == 1
        assert buffer.next_time() == 3

    def test_snapshots_before_events_within_a_time(self):
        buffer = TimeReorderBuffer()
        buffer.push(Report(_event("e1", 1), "d1", 0))
        buffer.push(Report(_snapshot("b", 1), "d1", 1))
        buffer.push(Report(_snapshot("a", 1), "d1", 2))
        released = buffer.release(1)
        assert [type(r.record).__name__ for r in released] == ["ObjectSnapshot", "ObjectSnapshot", "SystemEvent"]
        assert [r.arrival for r in released] == [1, 2, 0]

    def test_empty(self):
        buffer = TimeReorderBuffer()
        assert buffer.release(100) == []
        assert buffer.next_time() is None


class TestDuplicateReportBuffer:
    def test_repeated_event_is_dropped(self):
        buffer = DuplicateReportBuffer()
        assert buffer.admit(Report(_event("e1", 1, protocol="SSH"), "d1", 0))
        assert not buffer.admit(Report(_event("e1", 1, protocol="SSH"), "d2", 1))
        assert buffer.dropped == 1

    def test_conflicting_event_is_dropped_with_warning(self, caplog):
        buffer = DuplicateReportBuffer()
        buffer.admit(Report(_event("e1", 1, protocol="SSH"), "d1", 0))
        with caplog.at_level(logging.WARNING):
            assert not buffer.admit(Report(_event("e1", 1, protocol="NFS"), "d2", 1))
        assert "conflicting report of event 'e1' from d2" in caplog.text

    def test_identical_snapshot_is_dropped(self):
        buffer = DuplicateReportBuffer()
        assert buffer.admit(Report(_snapshot("a", 0, team="x"), "d1", 0))
        assert not buffer.admit(Report(_snapshot("a", 0, team="x"), "d2", 1))
        assert buffer.admit(Report(_snapshot("a", 0, team="y"), "d2", 2))
        assert buffer.admit(Report(_snapshot("a", 1, team="x"), "d2", 3))
        assert buffer.dropped == 1
