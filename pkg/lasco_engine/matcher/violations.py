"""Requirement checking and violation reports."""

import logging
from typing import Iterable, Literal, Optional, Sequence, Union

from pydantic import BaseModel, Field

from lasco_engine.evaluation.pipeline import requirement_holds
from lasco_engine.evaluation.values import AttrValue
from lasco_engine.history.graph import SystemGraph
from lasco_engine.history.model import Time
from lasco_engine.lang.lint import lint_errors
from lasco_engine.lang.policy import PolicyGraph
from lasco_engine.lang.predicate import render_value
from lasco_engine.matcher.initial import initial_matches
from lasco_engine.matcher.matches import PartialMatch
from lasco_engine.matcher.search import GrowStats, grow_matches, order_pieces
from lasco_engine.settings import LintFailedError, MatchOptions, settings

logger = logging.getLogger(__name__)

# ── Data Models ────────────────────────────────────────────────────

class NodeRef(BaseModel):
    object_id: str
    time: Union[int, str]


class FailedPredicate(BaseModel):
    element_id: str
    position: Literal["domain", "requirement"] = "requirement"


class MatchRecord(BaseModel):
    """A complete match as plain data: edge map, isolated-node map, bindings."""

    edges: dict[str, str] = Field(default_factory=dict)
    nodes: dict[str, NodeRef] = Field(default_factory=dict)
    incidental: dict[str, list[NodeRef]] = Field(default_factory=dict)
    bindings: dict[str, str] = Field(default_factory=dict)

    @classmethod
    def from_match(cls, match: PartialMatch) -> "MatchRecord":
        ps_map = match.ps_map
        return cls(
            edges=dict(sorted(ps_map.edge_map.items())),
            nodes={n: _node_ref(b) for n, b in sorted(ps_map.node_map.items())},
            incidental={
                n: [_node_ref(b) for b in sorted(bound, key=lambda b: (b[0], b[1]))]
                for n, bound in sorted(ps_map.incidental.items())
            },
            bindings={v: render_value(value) for v, value in sorted(match.conds.bindings.items())},
        )

    def key(self) -> tuple:
        return (
            tuple(self.edges.items()),
            tuple((n, r.object_id, str(r.time)) for n, r in self.nodes.items()),
        )

    def describe(self) -> list[str]:
        """Text fragments for the bound events, isolated nodes and bindings."""
        parts = []
        if self.edges:
            parts.append("edges " + ", ".join(f"{e}={m}" for e, m in self.edges.items()))
        if self.nodes:
            parts.append("nodes " + ", ".join(f"{n}={r.object_id}@{r.time}" for n, r in self.nodes.items()))
        if self.bindings:
            parts.append("bindings " + ", ".join(f"${v}={value}" for v, value in self.bindings.items()))
        return parts


def _node_ref(binding: tuple[str, Time]) -> NodeRef:
    object_id, time = binding
    return NodeRef(object_id=object_id, time=time if isinstance(time, int) else render_value(time))


class ViolationReport(BaseModel):
    policy: str
    match: MatchRecord
    failed: list[FailedPredicate]

    def key(self) -> tuple:
        return (self.policy, *self.match.key())

    def to_line(self) -> str:
        """One line of the structured (JSON lines) output."""
        return self.model_dump_json()

    def __str__(self) -> str:
        parts = [f"VIOLATION {self.policy}", *self.match.describe()]
        parts.append("failed " + ", ".join(f.element_id for f in self.failed))
        return "; ".join(parts)


# ── Matching ───────────────────────────────────────────────────────

def require_clean(p: PolicyGraph) -> None:
    errors = lint_errors(p)
    if errors:
        raise LintFailedError(p.name, errors)


def max_attempts_for(opts: MatchOptions) -> Optional[int]:
    return opts.max_attempts if opts.max_attempts is not None else settings.env.MAX_ATTEMPTS


def find_matches(
    p: PolicyGraph,
    g: SystemGraph,
    opts: Optional[MatchOptions] = None,
    stats: Optional[GrowStats] = None,
) -> list[PartialMatch]:
    """All complete domain matches of ``p`` in ``g``.

    Raises:
        LintFailedError: If ``p`` has lint errors.
    """
    opts = opts or MatchOptions()
    require_clean(p)
    initial = initial_matches(p, g, opts)
    order = order_pieces(p, {piece: len(found) for piece, found in initial.items()})
    return grow_matches(
        initial, order,
        same_event_attr=opts.same_event_attr, graph=g, stats=stats, max_attempts=max_attempts_for(opts),
    )


def failed_requirements(p: PolicyGraph, g: SystemGraph, match: PartialMatch) -> list[FailedPredicate]:
    """Requirement predicates a complete match fails.

    Edge requirements see the event's attributes plus the bindings; node
    requirements see the bindings alone.
    """
    bindings: dict[str, AttrValue] = dict(match.conds.bindings)
    failed: list[FailedPredicate] = []
    for node in p.nodes:
        if not requirement_holds(p.requirement[node], {}, bindings):
            failed.append(FailedPredicate(element_id=node))
    for edge in p.edges:
        event = g.event(match.ps_map.edge_map[edge.id])
        if not requirement_holds(p.requirement[edge.id], event.attrs, bindings):
            failed.append(FailedPredicate(element_id=edge.id))
    return failed


def violations_among(p: PolicyGraph, g: SystemGraph, matches: Iterable[PartialMatch]) -> list[ViolationReport]:
    reports = []
    for match in matches:
        failed = failed_requirements(p, g, match)
        if failed:
            reports.append(ViolationReport(policy=p.name, match=MatchRecord.from_match(match), failed=failed))
    return reports


def find_violations(
    p: PolicyGraph,
    g: SystemGraph,
    opts: Optional[MatchOptions] = None,
    stats: Optional[GrowStats] = None,
) -> list[ViolationReport]:
    """Every complete match of ``p`` in ``g`` that fails a requirement predicate.

    Raises:
        LintFailedError: If ``p`` has lint errors.
    """
    matches = find_matches(p, g, opts, stats)
    reports = violations_among(p, g, matches)
    logger.info("Policy %s: %d matches, %d violations", p.name, len(matches), len(reports))
    return reports


def check_composition(ps: Sequence[PolicyGraph], g: SystemGraph) -> bool:
    """True when any policy in ``ps`` is violated; an empty composition is upheld."""
    return any(find_violations(p, g) for p in ps)


def collapse_isolated(reports: Iterable[ViolationReport]) -> list[ViolationReport]:
    """One report per edge map and isolated-node objects, ignoring snapshot times."""
    kept: dict[tuple, ViolationReport] = {}
    for report in reports:
        key = (
            report.policy,
            tuple(report.match.edges.items()),
            tuple((n, r.object_id) for n, r in report.match.nodes.items()),
        )
        kept.setdefault(key, report)
    return list(kept.values())


def worst_case_matches(p: PolicyGraph, g: SystemGraph) -> int:
    """Upper bound on complete matches: events per policy edge times snapshots per isolated node."""
    return len(g.edges) ** len(p.edges) * len(g.nodes) ** len(p.isolated_nodes())
