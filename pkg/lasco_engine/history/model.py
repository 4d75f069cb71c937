"""System model: object snapshots, events and time-ordered histories."""

import logging
from decimal import Decimal
from typing import Any, Iterator, NamedTuple, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from lasco_engine.evaluation.values import values_equal
from lasco_engine.settings import HistoryConsistencyError

logger = logging.getLogger(__name__)

Time = Union[int, Decimal]

# ── Data Models ────────────────────────────────────────────────────

class ObjectSnapshot(BaseModel):
    """Attribute values of one object at one instant. ``attrs['id']`` is the object id."""

    model_config = ConfigDict(frozen=True)

    object_id: str
    time: Time
    attrs: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _implicit_id(cls, data: Any) -> Any:
        if isinstance(data, dict) and "object_id" in data:
            attrs = dict(data.get("attrs") or {})
            given = attrs.setdefault("id", data["object_id"])
            if not isinstance(given, str) or given != data["object_id"]:
                raise ValueError(f"id attribute {given!r} differs from object id {data['object_id']!r}")
            data = {**data, "attrs": attrs}
        return data


class SystemEvent(BaseModel):
    """An event from ``src`` to ``dst``. ``attrs['time']`` equals ``time``."""

    model_config = ConfigDict(frozen=True)

    event_id: str
    src: str
    dst: str
    time: Time
    attrs: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="before")
    @classmethod
    def _implicit_time(cls, data: Any) -> Any:
        if isinstance(data, dict) and "time" in data:
            attrs = dict(data.get("attrs") or {})
            given = attrs.setdefault("time", data["time"])
            if isinstance(given, bool) or not values_equal(given, data["time"]):
                raise ValueError(f"time attribute {given!r} differs from event time {data['time']!r}")
            data = {**data, "attrs": attrs}
        return data


class SystemInstance(NamedTuple):
    time: Time
    events: list[SystemEvent]
    snapshots: list[ObjectSnapshot]


class SystemHistory:
    """Instances keyed by time; records may be added in any order.

    Two snapshots of one object at one time are merged attribute-wise, the
    later addition winning.
    """

    def __init__(self) -> None:
        self._instances: dict[Time, SystemInstance] = {}
        self._event_ids: set[str] = set()

    def __len__(self) -> int:
        return len(self._instances)

    def _instance(self, time: Time) -> SystemInstance:
        instance = self._instances.get(time)
        if instance is None:
            instance = self._instances[time] = SystemInstance(time, [], [])
        return instance

    def add_snapshot(self, snapshot: ObjectSnapshot) -> None:
        instance = self._instance(snapshot.time)
        for index, existing in enumerate(instance.snapshots):
            if existing.object_id == snapshot.object_id:
                instance.snapshots[index] = ObjectSnapshot(
                    object_id=existing.object_id,
                    time=existing.time,
                    attrs={**existing.attrs, **snapshot.attrs},
                )
                return
        instance.snapshots.append(snapshot)

    def add_event(self, event: SystemEvent) -> None:
        if event.event_id in self._event_ids:
            raise HistoryConsistencyError(f"duplicate event id {event.event_id!r}")
        self._event_ids.add(event.event_id)
        self._instance(event.time).events.append(event)

    def instances(self) -> list[SystemInstance]:
        """Instances in increasing time order."""
        return [self._instances[t] for t in sorted(self._instances)]

    def snapshots(self) -> Iterator[ObjectSnapshot]:
        for instance in self.instances():
            yield from instance.snapshots

    def events(self) -> Iterator[SystemEvent]:
        for instance in self.instances():
            yield from instance.events

    def object_ids(self) -> set[str]:
        return {s.object_id for s in self.snapshots()}

    def validate(self) -> None:
        """Check that every event endpoint has a snapshot at or before the event.

        Raises:
            HistoryConsistencyError: Naming the first offending event.
        """
        first_seen: dict[str, Time] = {}
        for snapshot in self.snapshots():
            first_seen.setdefault(snapshot.object_id, snapshot.time)
        for event in self.events():
            for end in (event.src, event.dst):
                seen = first_seen.get(end)
                if seen is None or seen > event.time:
                    raise HistoryConsistencyError(
                        f"event {event.event_id!r} at time {event.time} refers to {end!r}, "
                        "which has no snapshot at or before that time"
                    )

    def merge(self, other: "SystemHistory") -> "SystemHistory":
        merged = SystemHistory()
        for history in (self, other):
            for snapshot in history.snapshots():
                merged.add_snapshot(snapshot)
        for history in (self, other):
            for event in history.events():
                if event.event_id not in merged._event_ids:
                    merged.add_event(event)
        return merged

    @classmethod
    def from_records(
        cls, snapshots: list[ObjectSnapshot], events: list[SystemEvent], validate: bool = True,
    ) -> "SystemHistory":
        history = cls()
        for snapshot in snapshots:
            history.add_snapshot(snapshot)
        for event in events:
            history.add_event(event)
        if validate:
            history.validate()
        return history

    def time_range(self) -> Optional[tuple[Time, Time]]:
        if not self._instances:
            return None
        return min(self._instances), max(self._instances)
