"""Simulation traces: LSH records tagged with the data source that observed them.

::

    @east snapshot 0 ws1 RootKit=true
    @mail.us.com event 3 c1 ws1 -> mail.us.com protocol="SMTP"

Host snapshots always carry ``name`` equal to the host name.
"""

import logging
from typing import NamedTuple, Union

from lasco_engine.history.lsh import parse_record, render_record
from lasco_engine.history.model import ObjectSnapshot, SystemEvent, SystemHistory, Time
from lasco_engine.settings import HistoryFormatError, TraceFormatError

logger = logging.getLogger(__name__)


class Report(NamedTuple):
    record: Union[ObjectSnapshot, SystemEvent]
    observed_by: str
    arrival: int

    @property
    def time(self) -> Time:
        return self.record.time


def with_host_name(snapshot: ObjectSnapshot) -> ObjectSnapshot:
    """``snapshot`` with ``name`` set to the host name.

    Raises:
        ValueError: If the snapshot names the host differently.
    """
    name = snapshot.attrs.get("name", snapshot.object_id)
    if name != snapshot.object_id:
        raise ValueError(f"host {snapshot.object_id!r} reported with name {name!r}")
    if "name" in snapshot.attrs:
        return snapshot
    return ObjectSnapshot(object_id=snapshot.object_id, time=snapshot.time, attrs={**snapshot.attrs, "name": name})


def parse_trace(text: str) -> list[Report]:
    """Parse a trace into reports numbered in file order.

    Raises:
        TraceFormatError: On a missing ``@`` tag, a malformed record or a
            snapshot whose ``name`` differs from its host.
    """
    reports: list[Report] = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tag, _, rest = stripped.partition(" ")
        if not tag.startswith("@") or len(tag) == 1:
            raise TraceFormatError("record must start with an @<department-or-host> tag", number)
        try:
            record = parse_record(rest)
            if isinstance(record, ObjectSnapshot):
                record = with_host_name(record)
        except (HistoryFormatError, ValueError) as exc:
            raise TraceFormatError(str(exc), number) from None
        reports.append(Report(record, tag[1:], len(reports)))
    logger.debug("Parsed trace with %d reports", len(reports))
    return reports


def render_trace(reports: list[Report]) -> str:
    return "".join(f"@{r.observed_by} {render_record(r.record)}\n" for r in reports)


def trace_history(reports: list[Report]) -> SystemHistory:
    """All reports as one history, events deduplicated by id.

    Raises:
        HistoryConsistencyError: If an event endpoint has no earlier snapshot.
    """
    history = SystemHistory()
    seen: set[str] = set()
    for report in reports:
        if isinstance(report.record, ObjectSnapshot):
            history.add_snapshot(report.record)
    for report in reports:
        record = report.record
        if isinstance(record, SystemEvent) and record.event_id not in seen:
            seen.add(record.event_id)
            history.add_event(record)
    history.validate()
    return history
