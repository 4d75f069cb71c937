"""Contingent matches: partial matches that still owe the evaluation of some endpoints.

An engine that sees an event but not the full state of one endpoint host
cannot evaluate that endpoint's node predicate. It records a contingent
condition instead, to be discharged by the match another engine builds from
the same event with that endpoint evaluated.

Requirement predicates are folded early, at the engine holding the
attributes, and the residuals travel with the match.
"""

import logging
from typing import Mapping, NamedTuple, Optional

from lasco_engine.evaluation.conditions import merge_conds
from lasco_engine.evaluation.pipeline import eval_pred, requirement_holds, residualize
from lasco_engine.evaluation.values import AttrSet
from lasco_engine.history.model import ObjectSnapshot, SystemEvent
from lasco_engine.lang.policy import PolicyEdge, PolicyGraph
from lasco_engine.lang.predicate import PredExpr, predicate_attrs
from lasco_engine.matcher.matches import EMPTY_MATCH, PartialMatch, edge_match, node_match, unify
from lasco_engine.matcher.violations import FailedPredicate
from lasco_engine.settings import MatchInvariantError

logger = logging.getLogger(__name__)

SOURCE = "source"
DESTINATION = "destination"

_HOST_ATTRS = frozenset({"id", "name"})


class ContingentCondition(NamedTuple):
    edge_id: str
    end: str


class ContingentMatch(NamedTuple):
    policy: str
    base: PartialMatch
    contingents: frozenset[ContingentCondition]
    carried: Mapping[str, PredExpr]

    def key(self) -> tuple:
        return (self.policy, self.base.key(), tuple(sorted(self.contingents)))

    def is_complete(self, p: PolicyGraph) -> bool:
        return not self.contingents and self.base.is_complete(p)


def empty_contingent_match(policy: str) -> ContingentMatch:
    return ContingentMatch(policy, EMPTY_MATCH, frozenset(), {})


def _discharged(conditions: frozenset[ContingentCondition], other: ContingentMatch) -> frozenset[ContingentCondition]:
    bound = other.base.ps_map.edge_map
    return frozenset(c for c in conditions if c.edge_id not in bound or c in other.contingents)


def combine_contingent(a: ContingentMatch, b: ContingentMatch) -> Optional[ContingentMatch]:
    """Merge two contingent matches of one policy, or ``None`` when they do not unify.

    A condition is dropped when the other match binds its edge without
    listing the same condition.
    """
    if a.policy != b.policy:
        raise ValueError(f"cannot combine matches of {a.policy!r} and {b.policy!r}")
    base = unify(a.base, b.base)
    if base is None:
        return None
    contingents = _discharged(a.contingents, b) | _discharged(b.contingents, a)
    return ContingentMatch(a.policy, base, contingents, {**a.carried, **b.carried})


def host_attrs(host: str) -> AttrSet:
    """All that is known about a host outside its own department."""
    return {"id": host, "name": host}


def needs_full_state(p: PolicyGraph, node: str) -> bool:
    return bool(predicate_attrs(p.domain[node]) - _HOST_ATTRS)


def edge_contingent_match(
    p: PolicyGraph,
    edge: PolicyEdge,
    event: SystemEvent,
    src_attrs: Optional[AttrSet],
    dst_attrs: Optional[AttrSet],
) -> Optional[ContingentMatch]:
    """Single-edge contingent match for ``event``.

    ``None`` for an endpoint's attributes means the engine does not hold that
    host's state; the endpoint is then evaluated on the host's name alone if
    its predicate allows it, and becomes contingent otherwise.
    """
    if edge.src == edge.dst and event.src != event.dst:
        return None
    parts = [eval_pred(p.domain[edge.id], event.attrs, {})]
    contingents: set[ContingentCondition] = set()
    for end, node, host, attrs in (
        (SOURCE, edge.src, event.src, src_attrs),
        (DESTINATION, edge.dst, event.dst, dst_attrs),
    ):
        if attrs is None:
            if needs_full_state(p, node):
                contingents.add(ContingentCondition(edge.id, end))
                continue
            attrs = host_attrs(host)
        parts.append(eval_pred(p.domain[node], attrs, {}))
    conds = merge_conds(*parts)
    if not conds.satisfiable:
        return None
    base = edge_match(edge, event.event_id, (event.src, event.time), (event.dst, event.time), conds)
    carried = {
        edge.id: residualize(p.requirement[edge.id], event.attrs),
        edge.src: residualize(p.requirement[edge.src], {}),
        edge.dst: residualize(p.requirement[edge.dst], {}),
    }
    return ContingentMatch(p.name, base, frozenset(contingents), carried)


def node_contingent_match(p: PolicyGraph, node: str, snapshot: ObjectSnapshot, attrs: AttrSet) -> Optional[ContingentMatch]:
    conds = eval_pred(p.domain[node], attrs, {})
    if not conds.satisfiable:
        return None
    base = node_match(node, (snapshot.object_id, snapshot.time), conds)
    return ContingentMatch(p.name, base, frozenset(), {node: residualize(p.requirement[node], {})})


def failed_carried(p: PolicyGraph, match: ContingentMatch) -> list[FailedPredicate]:
    """Requirement residuals a complete contingent match fails, in element order.

    Raises:
        MatchInvariantError: If the match is not complete or a residual is missing.
    """
    if not match.is_complete(p) or not match.base.conds.true_expr:
        raise MatchInvariantError(f"requirements checked on an incomplete match of {p.name!r}")
    bindings = dict(match.base.conds.bindings)
    failed = []
    for element_id in p.element_ids:
        if element_id not in match.carried:
            raise MatchInvariantError(f"no requirement residual for {element_id!r} in a match of {p.name!r}")
        if not requirement_holds(match.carried[element_id], {}, bindings):
            failed.append(FailedPredicate(element_id=element_id))
    return failed
