"""Report buffers in front of a department engine."""

import heapq
import itertools
import logging
from typing import Optional

from lasco_engine.distsim.trace import Report
from lasco_engine.evaluation.values import value_key
from lasco_engine.history.model import ObjectSnapshot, SystemEvent, Time

logger = logging.getLogger(__name__)


class TimeReorderBuffer:
    """Holds reports until their time step, releasing them in time order.

    Within one time, snapshots come out before events, then arrival order.
    """

    def __init__(self) -> None:
        self._heap: list[tuple] = []
        self._sequence = itertools.count()

    def push(self, report: Report) -> None:
        kind = 0 if isinstance(report.record, ObjectSnapshot) else 1
        heapq.heappush(self._heap, (report.time, kind, report.arrival, next(self._sequence), report))

    def release(self, until: Time) -> list[Report]:
        released = []
        while self._heap and self._heap[0][0] <= until:
            released.append(heapq.heappop(self._heap)[-1])
        return released

    def next_time(self) -> Optional[Time]:
        return self._heap[0][0] if self._heap else None

    def __len__(self) -> int:
        return len(self._heap)


def _attrs_key(attrs: dict) -> tuple:
    return tuple(sorted((name, value_key(value)) for name, value in attrs.items()))


class DuplicateReportBuffer:
    """Drops reports already seen: repeated event ids and identical snapshots."""

    def __init__(self) -> None:
        self._events: dict[str, SystemEvent] = {}
        self._snapshots: set[tuple] = set()
        self.dropped = 0

    def admit(self, report: Report) -> bool:
        record = report.record
        if isinstance(record, SystemEvent):
            seen = self._events.get(record.event_id)
            if seen is None:
                self._events[record.event_id] = record
                return True
            if (seen.src, seen.dst, _attrs_key(seen.attrs)) != (record.src, record.dst, _attrs_key(record.attrs)):
                logger.warning("Dropping conflicting report of event %r from %s", record.event_id, report.observed_by)
            self.dropped += 1
            return False
        key = (record.object_id, value_key(record.time), _attrs_key(record.attrs))
        if key in self._snapshots:
            self.dropped += 1
            return False
        self._snapshots.add(key)
        return True
