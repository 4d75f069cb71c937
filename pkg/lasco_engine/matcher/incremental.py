"""Incremental checking over a system graph that only grows.

A :class:`MatchCache` keeps the initial matches found so far, the complete
matches standing after the last run and the epoch up to which the graph has
been examined. Each run finds initial matches for newer elements, then grows
complete matches once per semantic piece with that piece restricted to its
new initial matches, so every complete match involving at least one new
element is found.

Late snapshots change the attributes of their object from their time on.
Stored events and snapshots they affect are examined again as if new;
standing matches built on them that no longer hold are withdrawn.
"""

import logging
from typing import Optional

from lasco_engine.history.graph import SystemGraph
from lasco_engine.history.model import ObjectSnapshot, Time
from lasco_engine.lang.policy import EDGE_PIECE, PolicyGraph, SemanticPiece, render_policy
from lasco_engine.matcher.initial import initial_matches
from lasco_engine.matcher.matches import NodeBinding, PartialMatch
from lasco_engine.matcher.search import GrowStats, grow_matches, order_pieces, same_event_key
from lasco_engine.matcher.violations import ViolationReport, max_attempts_for, require_clean, violations_among
from lasco_engine.settings import MatchOptions

logger = logging.getLogger(__name__)


class MatchCache:
    """Initial and complete matches of one policy over one system graph, plus a watermark epoch.

    ``withdrawn`` lists the complete matches the latest run took back.
    """

    def __init__(self, p: PolicyGraph) -> None:
        self.reset(p)

    def reset(self, p: PolicyGraph) -> None:
        self.policy_key = render_policy(p)
        self.watermark = -1
        self.initial: dict[SemanticPiece, list[PartialMatch]] = {piece: [] for piece in p.pieces()}
        self.standing: dict[tuple, PartialMatch] = {}
        self.withdrawn: list[PartialMatch] = []

    def belongs_to(self, p: PolicyGraph) -> bool:
        return self.policy_key == render_policy(p)

    def __len__(self) -> int:
        return sum(len(found) for found in self.initial.values())


def _identity(match: PartialMatch, p: PolicyGraph, g: SystemGraph, opts: MatchOptions) -> tuple:
    if opts.same_event_attr is None:
        return match.key()
    return same_event_key(match, p.pieces(), g, opts.same_event_attr)


def _stale_elements(
    g: SystemGraph, watermark: int, snapshots: list[ObjectSnapshot],
) -> tuple[set[str], set[NodeBinding]]:
    """Stored events and snapshots whose attributes the given late snapshots may have changed."""
    earliest: dict[str, Time] = {}
    for s in snapshots:
        if s.object_id not in earliest or s.time < earliest[s.object_id]:
            earliest[s.object_id] = s.time

    def _affected(object_id: str, time: Time) -> bool:
        return object_id in earliest and time >= earliest[object_id]

    events = {
        stamped.event.event_id for stamped in g.stamped_edges()
        if stamped.epoch <= watermark
        and (_affected(stamped.event.src, stamped.event.time) or _affected(stamped.event.dst, stamped.event.time))
    }
    nodes = {
        (stamped.snapshot.object_id, stamped.snapshot.time) for stamped in g.stamped_nodes()
        if stamped.epoch <= watermark and _affected(stamped.snapshot.object_id, stamped.snapshot.time)
    }
    return events, nodes


def _binds_any(match: PartialMatch, events: set[str], nodes: set[NodeBinding]) -> bool:
    return (
        any(event_id in events for event_id in match.ps_map.edge_map.values())
        or any(binding in nodes for binding in match.ps_map.node_map.values())
    )


def _restricted(
    p: PolicyGraph, opts: MatchOptions, events: set[str], nodes: set[NodeBinding],
) -> MatchOptions:
    """Options whose hints limit every piece to the given elements, within any hints already set."""
    edge_hints = {
        edge.id: sorted(e for e in events if edge.id not in opts.edge_hints or e in opts.edge_hints[edge.id])
        for edge in p.edges
    }
    node_hints = {}
    for piece in p.pieces():
        if piece.kind == EDGE_PIECE:
            continue
        wanted = set(opts.node_hints.get(piece.element_id, nodes))
        node_hints[piece.element_id] = sorted(binding for binding in nodes if binding in wanted)
    return opts.model_copy(update={"edge_hints": edge_hints, "node_hints": node_hints, "new_only": None})


def find_matches_incremental(
    p: PolicyGraph,
    g: SystemGraph,
    cache: MatchCache,
    opts: Optional[MatchOptions] = None,
    stats: Optional[GrowStats] = None,
) -> list[PartialMatch]:
    """Complete matches that appeared since the cache's watermark.

    A cache built for a different policy is reset first. With
    ``opts.same_event_attr`` set, a match equivalent to one already reported
    by an earlier run is not reported again.

    Raises:
        LintFailedError: If ``p`` has lint errors.
    """
    opts = opts or MatchOptions()
    require_clean(p)
    if not cache.belongs_to(p):
        logger.info("Policy %s changed; discarding its match cache", p.name)
        cache.reset(p)

    new_snapshots, new_events = g.new_since(cache.watermark)
    stale_events, stale_nodes = _stale_elements(g, cache.watermark, new_snapshots)
    cache.watermark = g.epoch
    cache.withdrawn = []
    if stale_events or stale_nodes:
        logger.debug(
            "Late snapshots for %s: re-examining %d events and %d snapshots",
            p.name, len(stale_events), len(stale_nodes),
        )
        for piece in cache.initial:
            cache.initial[piece] = [m for m in cache.initial[piece] if not _binds_any(m, stale_events, stale_nodes)]

    fresh_events = {e.event_id for e in new_events} | stale_events
    fresh_nodes = {(s.object_id, s.time) for s in new_snapshots} | stale_nodes
    fresh = initial_matches(p, g, _restricted(p, opts, fresh_events, fresh_nodes))
    for piece, found in fresh.items():
        cache.initial[piece].extend(found)

    suspects = {
        identity: match for identity, match in cache.standing.items()
        if _binds_any(match, stale_events, stale_nodes)
    }
    for identity in suspects:
        del cache.standing[identity]

    found_matches: dict[tuple, PartialMatch] = {}
    for piece, new_for_piece in fresh.items():
        if not new_for_piece:
            continue
        lists = dict(cache.initial)
        lists[piece] = new_for_piece
        order = order_pieces(p, {pc: len(candidates) for pc, candidates in lists.items()})
        for match in grow_matches(
            lists, order,
            same_event_attr=opts.same_event_attr, graph=g, stats=stats, max_attempts=max_attempts_for(opts),
        ):
            found_matches.setdefault(_identity(match, p, g, opts), match)

    appeared: list[PartialMatch] = []
    for identity, match in found_matches.items():
        if identity in cache.standing:
            continue
        previous = suspects.pop(identity, None)
        if previous is not None and previous.key() == match.key():
            cache.standing[identity] = previous
            continue
        if previous is not None:
            cache.withdrawn.append(previous)
        cache.standing[identity] = match
        appeared.append(match)
    cache.withdrawn.extend(suspects.values())

    if cache.withdrawn and opts.same_event_attr is not None:
        # A withdrawn match may have stood for equivalent ones never reported.
        order = order_pieces(p, {pc: len(candidates) for pc, candidates in cache.initial.items()})
        for match in grow_matches(
            cache.initial, order,
            same_event_attr=opts.same_event_attr, graph=g, stats=stats, max_attempts=max_attempts_for(opts),
        ):
            identity = _identity(match, p, g, opts)
            if identity not in cache.standing:
                cache.standing[identity] = match
                appeared.append(match)

    if cache.withdrawn:
        logger.warning("Late snapshots withdrew %d matches of %s", len(cache.withdrawn), p.name)
    logger.debug("Incremental run for %s: %d new complete matches", p.name, len(appeared))
    return appeared


def find_violations_incremental(
    p: PolicyGraph,
    g: SystemGraph,
    cache: MatchCache,
    opts: Optional[MatchOptions] = None,
    stats: Optional[GrowStats] = None,
) -> list[ViolationReport]:
    """Violations among the complete matches that appeared since the last run.

    Violations the run took back are available from :func:`withdrawn_violations`.
    """
    matches = find_matches_incremental(p, g, cache, opts, stats)
    reports = violations_among(p, g, matches)
    logger.info("Policy %s: %d new matches, %d new violations", p.name, len(matches), len(reports))
    return reports


def withdrawn_violations(p: PolicyGraph, g: SystemGraph, cache: MatchCache) -> list[ViolationReport]:
    """Violations among the matches the latest run of ``cache`` withdrew.

    Requirements only read event attributes and bindings, so a withdrawn
    match fails the same requirements it failed when reported.
    """
    return violations_among(p, g, cache.withdrawn)
