"""The system-graph view of a history: snapshots as nodes, events as edges.

Every node and edge is stamped with the epoch of the batch that brought it.
Matching in incremental mode asks for the elements newer than an epoch.
"""

import bisect
import logging
from typing import Iterable, NamedTuple, Optional

from lasco_engine.evaluation.values import AttrSet
from lasco_engine.history.model import ObjectSnapshot, SystemEvent, SystemHistory, Time
from lasco_engine.settings import HistoryConsistencyError

logger = logging.getLogger(__name__)


class StampedSnapshot(NamedTuple):
    snapshot: ObjectSnapshot
    epoch: int


class StampedEvent(NamedTuple):
    event: SystemEvent
    epoch: int


class SystemGraph:
    """Append-only graph view over snapshots and events.

    An object's attributes at time ``t`` are those of its snapshots up to
    ``t`` merged forward, later snapshots overriding earlier ones.
    """

    def __init__(self) -> None:
        self.epoch = 0
        self._snapshots: dict[str, list[StampedSnapshot]] = {}
        self._times: dict[str, list[Time]] = {}
        self._merged: dict[str, list[AttrSet]] = {}
        self._events: dict[str, StampedEvent] = {}
        self._external: set[str] = set()

    # ── Views ───────────────────────────────────────────────────

    @property
    def nodes(self) -> list[ObjectSnapshot]:
        return [s.snapshot for stamped in self._snapshots.values() for s in stamped]

    @property
    def edges(self) -> list[SystemEvent]:
        return [e.event for e in self._events.values()]

    def stamped_nodes(self) -> list[StampedSnapshot]:
        return [s for stamped in self._snapshots.values() for s in stamped]

    def stamped_edges(self) -> list[StampedEvent]:
        return list(self._events.values())

    def event(self, event_id: str) -> SystemEvent:
        return self._events[event_id].event

    def has_event(self, event_id: str) -> bool:
        return event_id in self._events

    def knows(self, object_id: str) -> bool:
        return object_id in self._snapshots or object_id in self._external

    def object_ids(self) -> list[str]:
        return list(self._snapshots)

    def new_since(self, epoch: int) -> tuple[list[ObjectSnapshot], list[SystemEvent]]:
        """Snapshots and events stamped with an epoch greater than ``epoch``."""
        snapshots = [s.snapshot for s in self.stamped_nodes() if s.epoch > epoch]
        events = [e.event for e in self._events.values() if e.epoch > epoch]
        return snapshots, events

    # ── Attributes ──────────────────────────────────────────────

    def effective_attrs(self, object_id: str, time: Time) -> AttrSet:
        """Attributes of ``object_id`` as of ``time``.

        Raises:
            HistoryConsistencyError: If the object has no snapshot at or
                before ``time``.
        """
        times = self._times.get(object_id)
        index = bisect.bisect_right(times, time) if times else 0
        if index == 0:
            raise HistoryConsistencyError(f"object {object_id!r} has no snapshot at or before time {time}")
        return self._merged[object_id][index - 1]

    def resolvable(self, object_id: str, time: Time) -> bool:
        times = self._times.get(object_id)
        return bool(times) and times[0] <= time

    # ── Mutation ────────────────────────────────────────────────

    def append(
        self,
        snapshots: Iterable[ObjectSnapshot],
        events: Iterable[SystemEvent],
        external_ids: Iterable[str] = (),
    ) -> int:
        """Add a batch stamped with a fresh epoch; returns the epoch in effect afterwards.

        Snapshots of one object at one time within the batch are merged.
        Late arrivals (times before existing ones) are accepted.

        Args:
            snapshots: New object snapshots.
            events: New events.
            external_ids: Objects that may appear as event endpoints without
                any snapshot in this graph.

        Raises:
            HistoryConsistencyError: On a duplicate event id, a snapshot for an
                (object, time) already present, or an endpoint never seen.
        """
        batch_snapshots = _merge_batch(snapshots)
        batch_events = list(events)
        external = set(external_ids)
        if not batch_snapshots and not batch_events:
            self._external |= external
            return self.epoch

        batch_objects = {s.object_id for s in batch_snapshots}
        batch_event_ids: set[str] = set()
        for event in batch_events:
            if event.event_id in self._events or event.event_id in batch_event_ids:
                raise HistoryConsistencyError(f"duplicate event id {event.event_id!r}")
            batch_event_ids.add(event.event_id)
            for end in (event.src, event.dst):
                if not (self.knows(end) or end in batch_objects or end in external):
                    raise HistoryConsistencyError(
                        f"event {event.event_id!r} refers to unknown object {end!r}"
                    )
        for snapshot in batch_snapshots:
            if snapshot.time in self._times.get(snapshot.object_id, ()):
                raise HistoryConsistencyError(
                    f"object {snapshot.object_id!r} already has a snapshot at time {snapshot.time}"
                )

        self.epoch += 1
        self._external |= external
        touched: set[str] = set()
        for snapshot in batch_snapshots:
            stamped = self._snapshots.setdefault(snapshot.object_id, [])
            times = self._times.setdefault(snapshot.object_id, [])
            index = bisect.bisect_right(times, snapshot.time)
            times.insert(index, snapshot.time)
            stamped.insert(index, StampedSnapshot(snapshot, self.epoch))
            touched.add(snapshot.object_id)
        for object_id in touched:
            self._remerge(object_id)
        for event in batch_events:
            self._events[event.event_id] = StampedEvent(event, self.epoch)

        logger.debug(
            "Epoch %d: %d snapshots, %d events", self.epoch, len(batch_snapshots), len(batch_events),
        )
        return self.epoch

    def _remerge(self, object_id: str) -> None:
        merged: list[AttrSet] = []
        current: AttrSet = {}
        for stamped in self._snapshots[object_id]:
            current = {**current, **stamped.snapshot.attrs}
            merged.append(current)
        self._merged[object_id] = merged


def _merge_batch(snapshots: Iterable[ObjectSnapshot]) -> list[ObjectSnapshot]:
    merged: dict[tuple[str, Time], ObjectSnapshot] = {}
    for snapshot in snapshots:
        key = (snapshot.object_id, snapshot.time)
        if key in merged:
            previous = merged[key]
            snapshot = ObjectSnapshot(
                object_id=snapshot.object_id, time=snapshot.time, attrs={**previous.attrs, **snapshot.attrs},
            )
        merged[key] = snapshot
    return list(merged.values())


def build_system_graph(h: SystemHistory, times: Optional[tuple[Time, Time]] = None) -> SystemGraph:
    """Graph view of ``h``, optionally restricted to an inclusive time range.

    Everything is stamped with epoch 0.
    """
    g = SystemGraph()
    lo, hi = times if times is not None else (None, None)

    def _selected(t: Time) -> bool:
        return (lo is None or t >= lo) and (hi is None or t <= hi)

    snapshots = [s for s in h.snapshots() if _selected(s.time)]
    events = [e for e in h.events() if _selected(e.time)]
    # Endpoints whose snapshots fall outside the range stay resolvable by id only.
    endpoints = {end for e in events for end in (e.src, e.dst)}
    g.append(snapshots, events, external_ids=endpoints)
    g.epoch = 0
    for object_id, stamped in g._snapshots.items():
        g._snapshots[object_id] = [StampedSnapshot(s.snapshot, 0) for s in stamped]
    for event_id, stamped_event in g._events.items():
        g._events[event_id] = StampedEvent(stamped_event.event, 0)
    return g
