"""Department engines: local matching, pool combination, alerting and forwarding.

Each engine holds the full state of the hosts its department contains and
sees every event touching them. New reports become single-piece contingent
matches; new matches, local or sent up by child engines, are combined with
everything in the pool. Then, per new match:

* complete: requirements are checked and an alert raised if one fails;
* missing a local or half-local edge, or a local isolated node: kept in the
  pool to wait for it;
* otherwise: sent to the parent engine, and kept unless only non-local
  pieces remain to be bound.
"""

import logging
from collections import deque
from typing import Hashable, Iterable, Optional, Sequence, Union

from pydantic import BaseModel

from lasco_engine.distsim.buffers import DuplicateReportBuffer, TimeReorderBuffer
from lasco_engine.distsim.contingent import (
    ContingentMatch,
    combine_contingent,
    edge_contingent_match,
    failed_carried,
    node_contingent_match,
)
from lasco_engine.distsim.locality import HALF_LOCAL, LOCAL, NON_LOCAL, Locality, classify_locality
from lasco_engine.distsim.topology import Topology
from lasco_engine.distsim.trace import Report
from lasco_engine.history.graph import SystemGraph
from lasco_engine.history.model import ObjectSnapshot, SystemEvent, Time
from lasco_engine.lang.policy import EDGE_PIECE, PolicyGraph, SemanticPiece
from lasco_engine.lang.predicate import render_value
from lasco_engine.matcher.violations import FailedPredicate, MatchRecord, ViolationReport
from lasco_engine.settings import HistoryConsistencyError

logger = logging.getLogger(__name__)

# ── Data Models ────────────────────────────────────────────────────

class Alert(BaseModel):
    policy: str
    department: str
    time: Union[int, str]
    match: MatchRecord
    failed: list[FailedPredicate]

    def key(self) -> tuple:
        return (self.policy, *self.match.key())

    def to_violation(self) -> ViolationReport:
        return ViolationReport(policy=self.policy, match=self.match, failed=self.failed)

    def to_line(self) -> str:
        return self.model_dump_json()

    def __str__(self) -> str:
        parts = [f"ALERT {self.policy} @{self.department} t={self.time}", *self.match.describe()]
        parts.append("failed " + ", ".join(f.element_id for f in self.failed))
        return "; ".join(parts)


class EngineStats(BaseModel):
    reports: int = 0
    rejected: int = 0
    singles: int = 0
    combinations: int = 0
    messages_in: int = 0
    messages_out: int = 0
    alerts: int = 0
    retained: int = 0


# ── Match pool ─────────────────────────────────────────────────────

def _bound_element(match: ContingentMatch, piece: SemanticPiece) -> Optional[Hashable]:
    ps_map = match.base.ps_map
    if piece.kind == EDGE_PIECE:
        return ps_map.edge_map.get(piece.element_id)
    return ps_map.node_map.get(piece.element_id)


class MatchPool:
    """Retained contingent matches of one policy.

    With indexing on, the entries offered for combination with a match are
    those that, for every piece the match binds, leave the piece unbound or
    bind it to the same system element.
    """

    def __init__(self, p: PolicyGraph, indexed: bool = True) -> None:
        self.pieces = p.pieces()
        self.indexed = indexed
        self.entries: list[ContingentMatch] = []
        self._bound: dict[SemanticPiece, dict[Hashable, set[int]]] = {piece: {} for piece in self.pieces}
        self._unbound: dict[SemanticPiece, set[int]] = {piece: set() for piece in self.pieces}

    def add(self, match: ContingentMatch) -> None:
        index = len(self.entries)
        self.entries.append(match)
        for piece in self.pieces:
            element = _bound_element(match, piece)
            if element is None:
                self._unbound[piece].add(index)
            else:
                self._bound[piece].setdefault(element, set()).add(index)

    def candidates(self, match: ContingentMatch) -> list[ContingentMatch]:
        if not self.indexed:
            return list(self.entries)
        selected: Optional[set[int]] = None
        for piece in self.pieces:
            element = _bound_element(match, piece)
            if element is None:
                continue
            compatible = self._unbound[piece] | self._bound[piece].get(element, set())
            selected = compatible if selected is None else selected & compatible
        if selected is None:
            return list(self.entries)
        return [self.entries[i] for i in sorted(selected)]

    def __len__(self) -> int:
        return len(self.entries)


# ── Engine ─────────────────────────────────────────────────────────

class DepartmentEngine:
    """The policy engine of one department."""

    def __init__(
        self,
        name: str,
        topology: Topology,
        policies: Sequence[PolicyGraph],
        pool_index: str = "indexed",
    ) -> None:
        self.name = name
        self.parent = topology.parent(name)
        self.hosts = topology.contained_hosts(name)
        self.scope = topology.scope(name)
        self.policies = {p.name: p for p in policies}
        self.locality: dict[str, Locality] = {
            p.name: classify_locality(p, self.scope, topology.hosts) for p in policies
        }
        self.graph = SystemGraph()
        self.reorder = TimeReorderBuffer()
        self.duplicates = DuplicateReportBuffer()
        self.pools = {p.name: MatchPool(p, indexed=pool_index == "indexed") for p in policies}
        self.stats = EngineStats()
        self._seen: set[tuple] = set()
        self._alerted: set[tuple] = set()

    def receive(self, report: Report) -> None:
        self.reorder.push(report)

    def pool_size(self) -> int:
        return sum(len(pool) for pool in self.pools.values())

    # ── Locality rules ──────────────────────────────────────

    def ready_to_forward(self, p: PolicyGraph, match: ContingentMatch) -> bool:
        """Every local and half-local edge and every local isolated node is bound."""
        locality = self.locality[p.name]
        for piece in p.pieces():
            kind = locality.of(piece)
            needed = kind in (LOCAL, HALF_LOCAL) if piece.kind == EDGE_PIECE else kind == LOCAL
            if needed and not match.base.binds(piece):
                return False
        return True

    def cannot_grow(self, p: PolicyGraph, match: ContingentMatch) -> bool:
        """Only non-local pieces are left unbound and nothing awaits discharge."""
        if match.contingents:
            return False
        locality = self.locality[p.name]
        return all(match.base.binds(piece) or locality.of(piece) == NON_LOCAL for piece in p.pieces())

    # ── Processing ──────────────────────────────────────────

    def _dispose(
        self, p: PolicyGraph, match: ContingentMatch, time: Time, alerts: list[Alert], outgoing: list[ContingentMatch],
    ) -> None:
        if match.is_complete(p):
            failed = failed_carried(p, match)
            if not failed:
                return
            record = MatchRecord.from_match(match.base)
            alert = Alert(
                policy=p.name,
                department=self.name,
                time=time if isinstance(time, int) else render_value(time),
                match=record,
                failed=failed,
            )
            if alert.key() not in self._alerted:
                self._alerted.add(alert.key())
                alerts.append(alert)
                self.stats.alerts += 1
                logger.info("Alert for %s at %s: %s", p.name, self.name, ", ".join(record.edges.values()))
            return

        pool = self.pools[p.name]
        if not self.ready_to_forward(p, match):
            pool.add(match)
            return
        if self.parent is not None:
            outgoing.append(match)
            self.stats.messages_out += 1
        if self.parent is not None and self.cannot_grow(p, match):
            return
        pool.add(match)

    def process(self, match: ContingentMatch, time: Time, alerts: list[Alert], outgoing: list[ContingentMatch]) -> None:
        """Combine ``match`` with the pool until no new matches appear, disposing of each."""
        p = self.policies[match.policy]
        pool = self.pools[p.name]
        queue = deque([match])
        while queue:
            current = queue.popleft()
            key = current.key()
            if key in self._seen:
                continue
            self._seen.add(key)
            for other in pool.candidates(current):
                merged = combine_contingent(current, other)
                if merged is not None:
                    self.stats.combinations += 1
                    queue.append(merged)
            self._dispose(p, current, time, alerts, outgoing)


def _report_order(report: Report) -> tuple:
    return (report.time, 0 if isinstance(report.record, ObjectSnapshot) else 1, report.arrival)


def _ingest_snapshot(e: DepartmentEngine, snapshot: ObjectSnapshot) -> list[ContingentMatch]:
    if snapshot.object_id not in e.hosts:
        raise HistoryConsistencyError(f"host {snapshot.object_id!r} does not belong to department {e.name!r}")
    e.graph.append([snapshot], [])
    attrs = e.graph.effective_attrs(snapshot.object_id, snapshot.time)
    found = []
    for p in e.policies.values():
        for node in p.isolated_nodes():
            match = node_contingent_match(p, node, snapshot, attrs)
            if match is not None:
                found.append(match)
    return found


def _ingest_event(e: DepartmentEngine, event: SystemEvent) -> list[ContingentMatch]:
    local = [end in e.hosts for end in (event.src, event.dst)]
    if not any(local):
        raise HistoryConsistencyError(f"event {event.event_id!r} touches no host of department {e.name!r}")
    for end, is_local in zip((event.src, event.dst), local):
        if is_local and not e.graph.resolvable(end, event.time):
            raise HistoryConsistencyError(
                f"event {event.event_id!r} refers to {end!r}, which has no snapshot at or before time {event.time}"
            )
    external = [end for end, is_local in zip((event.src, event.dst), local) if not is_local]
    e.graph.append([], [event], external_ids=external)

    src_attrs = e.graph.effective_attrs(event.src, event.time) if local[0] else None
    dst_attrs = e.graph.effective_attrs(event.dst, event.time) if local[1] else None
    found = []
    for p in e.policies.values():
        for edge in p.edges:
            match = edge_contingent_match(p, edge, event, src_attrs, dst_attrs)
            if match is not None:
                found.append(match)
    return found


def ingest_reports(e: DepartmentEngine, batch: Iterable[Report]) -> list[ContingentMatch]:
    """Record a batch of reports and return the single-piece contingent matches they give.

    Reports are taken in time order, snapshots before events. Repeated
    reports are dropped; a report that contradicts the engine's graph is
    rejected with a warning and the rest of the batch goes on.
    """
    found: list[ContingentMatch] = []
    for report in sorted(batch, key=_report_order):
        if not e.duplicates.admit(report):
            continue
        e.stats.reports += 1
        try:
            if isinstance(report.record, ObjectSnapshot):
                found.extend(_ingest_snapshot(e, report.record))
            else:
                found.extend(_ingest_event(e, report.record))
        except HistoryConsistencyError as exc:
            e.stats.rejected += 1
            logger.warning("Engine %s rejected a report from %s: %s", e.name, report.observed_by, exc)
    e.stats.singles += len(found)
    return found


def engine_step(
    e: DepartmentEngine, time: Time, messages: Iterable[ContingentMatch] = (),
) -> tuple[list[Alert], list[ContingentMatch]]:
    """Advance ``e`` to ``time``: ingest buffered reports up to it, then process
    the new local matches and the messages from child engines.

    Returns:
        The alerts raised and the matches to send to the parent engine.
    """
    alerts: list[Alert] = []
    outgoing: list[ContingentMatch] = []
    new_matches = ingest_reports(e, e.reorder.release(time))
    incoming = list(messages)
    e.stats.messages_in += len(incoming)
    for match in [*new_matches, *incoming]:
        e.process(match, time, alerts, outgoing)
    return alerts, outgoing
