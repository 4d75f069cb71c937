"""Initial matches: every semantic piece tried against every candidate system element."""

import logging
from typing import Iterable, Mapping, Optional

from lasco_engine.evaluation.conditions import VarConditions, merge_conds
from lasco_engine.evaluation.pipeline import eval_pred
from lasco_engine.evaluation.values import AttrSet, AttrValue
from lasco_engine.history.graph import SystemGraph
from lasco_engine.history.model import ObjectSnapshot, SystemEvent
from lasco_engine.lang.policy import EDGE_PIECE, PolicyEdge, PolicyGraph, SemanticPiece
from lasco_engine.lang.predicate import PredExpr
from lasco_engine.matcher.matches import NodeBinding, PartialMatch, edge_match, node_match
from lasco_engine.settings import MatchOptions

logger = logging.getLogger(__name__)

InitialMatches = dict[SemanticPiece, list[PartialMatch]]


def match_node(pred: PredExpr, attrs: AttrSet, b: Mapping[str, AttrValue]) -> VarConditions:
    return eval_pred(pred, attrs, b)


def match_edge(pred: PredExpr, attrs: AttrSet, b: Mapping[str, AttrValue]) -> VarConditions:
    return eval_pred(pred, attrs, b)


def match_edge_area(
    edge: PolicyEdge,
    event: SystemEvent,
    p: PolicyGraph,
    g: SystemGraph,
    b: Optional[Mapping[str, AttrValue]] = None,
) -> VarConditions:
    """Conditions under which ``event`` matches ``edge`` together with both endpoints.

    Endpoint attributes are those in effect at the event's time.
    """
    b = b or {}
    return merge_conds(
        match_edge(p.domain[edge.id], event.attrs, b),
        match_node(p.domain[edge.src], g.effective_attrs(event.src, event.time), b),
        match_node(p.domain[edge.dst], g.effective_attrs(event.dst, event.time), b),
    )


def _candidate_events(g: SystemGraph, edge: PolicyEdge, opts: MatchOptions) -> Iterable[SystemEvent]:
    if edge.id in opts.edge_hints:
        events = []
        for event_id in opts.edge_hints[edge.id]:
            if g.has_event(event_id):
                events.append(g.event(event_id))
            else:
                logger.warning("Hint for %s names unknown event %r", edge.id, event_id)
        stamped = {e.event.event_id: e.epoch for e in g.stamped_edges()}
        return [e for e in events if opts.new_only is None or stamped[e.event_id] > opts.new_only]
    return [
        stamped.event for stamped in g.stamped_edges()
        if opts.new_only is None or stamped.epoch > opts.new_only
    ]


def _candidate_snapshots(g: SystemGraph, node: str, opts: MatchOptions) -> Iterable[ObjectSnapshot]:
    snapshots = [
        stamped.snapshot for stamped in g.stamped_nodes()
        if opts.new_only is None or stamped.epoch > opts.new_only
    ]
    if node in opts.node_hints:
        wanted = set(opts.node_hints[node])
        snapshots = [s for s in snapshots if (s.object_id, s.time) in wanted]
    return snapshots


def edge_initial_matches(p: PolicyGraph, edge: PolicyEdge, g: SystemGraph, opts: MatchOptions) -> list[PartialMatch]:
    found: list[PartialMatch] = []
    for event in _candidate_events(g, edge, opts):
        if edge.src == edge.dst and event.src != event.dst:
            continue
        if not (g.resolvable(event.src, event.time) and g.resolvable(event.dst, event.time)):
            logger.warning("Skipping event %r: an endpoint has no snapshot at time %s", event.event_id, event.time)
            continue
        conds = match_edge_area(edge, event, p, g)
        if not conds.satisfiable:
            continue
        src: NodeBinding = (event.src, event.time)
        dst: NodeBinding = (event.dst, event.time)
        found.append(edge_match(edge, event.event_id, src, dst, conds))
    return found


def node_initial_matches(p: PolicyGraph, node: str, g: SystemGraph, opts: MatchOptions) -> list[PartialMatch]:
    found: list[PartialMatch] = []
    for snapshot in _candidate_snapshots(g, node, opts):
        attrs = g.effective_attrs(snapshot.object_id, snapshot.time)
        conds = match_node(p.domain[node], attrs, {})
        if conds.satisfiable:
            found.append(node_match(node, (snapshot.object_id, snapshot.time), conds))
    return found


def initial_matches(p: PolicyGraph, g: SystemGraph, opts: Optional[MatchOptions] = None) -> InitialMatches:
    """Single-piece matches for every semantic piece of ``p``.

    Candidates whose conditions cannot be satisfied are discarded.
    """
    opts = opts or MatchOptions()
    result: InitialMatches = {}
    for piece in p.pieces():
        if piece.kind == EDGE_PIECE:
            result[piece] = edge_initial_matches(p, p.edge(piece.element_id), g, opts)
        else:
            result[piece] = node_initial_matches(p, piece.element_id, g, opts)
    logger.debug(
        "Initial matches for %s: %s",
        p.name, ", ".join(f"{piece}={len(found)}" for piece, found in result.items()),
    )
    return result
