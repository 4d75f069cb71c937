"""Discrete-time simulation of a department tree of policy engines.

Reports go to the engine of every department holding one of the hosts
involved. Time advances in the distinct times of the trace; at each step the
engines run deepest first, so matches sent up a level are processed by the
parent in the same step.
"""

import logging
from collections import defaultdict
from typing import NamedTuple, Optional, Sequence

from lasco_engine.distsim.engine import Alert, DepartmentEngine, EngineStats, engine_step
from lasco_engine.distsim.topology import Topology
from lasco_engine.distsim.trace import Report, trace_history
from lasco_engine.history.model import ObjectSnapshot, SystemHistory
from lasco_engine.lang.policy import PolicyGraph
from lasco_engine.matcher.violations import ViolationReport, require_clean
from lasco_engine.settings import SimulationOptions, TopologyError, settings

logger = logging.getLogger(__name__)


class SimulationResult(NamedTuple):
    alerts: list[Alert]
    stats: dict[str, EngineStats]
    history: SystemHistory

    def unique_alerts(self) -> list[Alert]:
        """First alert per violating match; several engines may raise the same one."""
        kept: dict[tuple, Alert] = {}
        for alert in self.alerts:
            kept.setdefault(alert.key(), alert)
        return list(kept.values())

    def violations(self) -> list[ViolationReport]:
        return [alert.to_violation() for alert in self.unique_alerts()]


def report_targets(t: Topology, report: Report) -> list[str]:
    """Departments that receive ``report``.

    Raises:
        TopologyError: If the report names a host the topology does not place.
    """
    record = report.record
    if isinstance(record, ObjectSnapshot):
        return [t.department_of(record.object_id)]
    targets = [t.department_of(record.src)]
    destination = t.department_of(record.dst)
    if destination not in targets:
        targets.append(destination)
    return targets


def run_simulation(
    t: Topology,
    policies: Sequence[PolicyGraph],
    reports: Sequence[Report],
    opts: Optional[SimulationOptions] = None,
) -> SimulationResult:
    """Run every engine of ``t`` over ``reports`` and collect their alerts.

    Raises:
        LintFailedError: If a policy has lint errors.
        TopologyError: If a report names an unplaced host or an unknown source.
        HistoryConsistencyError: If the trace as a whole is inconsistent.
    """
    opts = opts or SimulationOptions(pool_index=settings.env.POOL_INDEX)
    for p in policies:
        require_clean(p)
    history = trace_history(list(reports))

    engines = {d: DepartmentEngine(d, t, policies, pool_index=opts.pool_index) for d in t.departments}
    for report in reports:
        if report.observed_by not in t:
            raise TopologyError(f"report {report.arrival} tagged with unknown source {report.observed_by!r}")
        for department in report_targets(t, report):
            engines[department].receive(report)

    times = sorted({report.time for report in reports})
    order = t.bottom_up()
    alerts: list[Alert] = []
    for time in times:
        inbox: dict[str, list] = defaultdict(list)
        for department in order:
            raised, outgoing = engine_step(engines[department], time, inbox.pop(department, []))
            alerts.extend(raised)
            parent = t.parent(department)
            if parent is not None:
                inbox[parent].extend(outgoing)

    for engine in engines.values():
        engine.stats.retained = engine.pool_size()
    stats = {d: engines[d].stats for d in order}
    logger.info(
        "Simulated %d reports over %d departments: %d alerts",
        len(reports), len(engines), len(alerts),
    )
    return SimulationResult(alerts, stats, history)
