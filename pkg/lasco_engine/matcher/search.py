"""Growing complete matches out of initial matches.

The search is a depth-first recursion over an ordered list of semantic
pieces. At each level every initial match of the next piece is unified with
the match accumulated so far; branches that fail to unify are pruned.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from lasco_engine.history.graph import SystemGraph
from lasco_engine.lang.policy import EDGE_PIECE, NODE_PIECE, PolicyGraph, SemanticPiece
from lasco_engine.matcher.matches import EMPTY_MATCH, PartialMatch, unify
from lasco_engine.settings import MatchInvariantError, SearchLimitError

logger = logging.getLogger(__name__)


@dataclass
class GrowStats:
    """Work counters for one or more :func:`grow_matches` runs."""

    attempts: int = 0
    matches: int = 0
    duplicates: int = 0


def order_pieces(p: PolicyGraph, counts: Mapping[SemanticPiece, int]) -> list[SemanticPiece]:
    """Search order: big connected components first, few-candidate pieces first within one.

    Pieces of one component stay together. Isolated nodes come last. Ties
    keep declaration order.
    """
    pieces = p.pieces()
    position = {piece: index for index, piece in enumerate(pieces)}

    groups: list[list[SemanticPiece]] = []
    for component in p.components():
        group = [SemanticPiece(EDGE_PIECE, e.id) for e in p.edges if e.src in component]
        if group:
            groups.append(group)
    groups.sort(key=lambda group: (-len(group), position[group[0]]))

    def _by_count(piece: SemanticPiece) -> tuple[int, int]:
        return counts.get(piece, 0), position[piece]

    ordered: list[SemanticPiece] = []
    for group in groups:
        ordered.extend(sorted(group, key=_by_count))
    ordered.extend(sorted((piece for piece in pieces if piece.kind == NODE_PIECE), key=_by_count))
    return ordered


def same_event_key(
    match: PartialMatch, order: Sequence[SemanticPiece], graph: SystemGraph, attribute: str,
) -> tuple:
    """What a complete match binds, with events that share ``attribute``'s value made interchangeable."""
    parts = []
    for piece in order:
        if piece.kind == EDGE_PIECE:
            event_id = match.ps_map.edge_map[piece.element_id]
            event = graph.event(event_id)
            if attribute in event.attrs:
                parts.append((piece.element_id, "set", repr(event.attrs[attribute])))
            else:
                parts.append((piece.element_id, "event", event_id))
        else:
            parts.append((piece.element_id, "node", repr(match.ps_map.node_map[piece.element_id])))
    return tuple(sorted(parts))


def grow_matches(
    initial: Mapping[SemanticPiece, Sequence[PartialMatch]],
    order: Sequence[SemanticPiece],
    same_event_attr: Optional[str] = None,
    graph: Optional[SystemGraph] = None,
    stats: Optional[GrowStats] = None,
    max_attempts: Optional[int] = None,
) -> list[PartialMatch]:
    """Every complete match obtainable by unifying one initial match per piece.

    Args:
        initial: Initial matches per piece.
        order: The pieces, in search order.
        same_event_attr: Events sharing a value of this attribute count as one
            event; complete matches differing only by such swaps are reported
            once. Needs ``graph``.
        graph: System graph the initial matches came from.
        stats: Counters to update.
        max_attempts: Abort after this many unification attempts.

    Raises:
        MatchInvariantError: If a complete match keeps a residual condition.
        SearchLimitError: If ``max_attempts`` is exceeded.
    """
    if same_event_attr is not None and graph is None:
        raise ValueError("same_event_attr needs the system graph")
    stats = stats if stats is not None else GrowStats()
    results: list[PartialMatch] = []
    seen: set[tuple] = set()

    def _grow(level: int, current: PartialMatch) -> None:
        if level == len(order):
            if not current.conds.true_expr:
                raise MatchInvariantError(
                    f"complete match {dict(current.ps_map.edge_map)} left with condition "
                    f"{current.conds.condition!r}"
                )
            if same_event_attr is not None:
                key = same_event_key(current, order, graph, same_event_attr)
                if key in seen:
                    stats.duplicates += 1
                    return
                seen.add(key)
            stats.matches += 1
            results.append(current)
            return
        for candidate in initial.get(order[level], ()):
            stats.attempts += 1
            if max_attempts is not None and stats.attempts > max_attempts:
                raise SearchLimitError(f"gave up after {max_attempts} combination attempts")
            merged = candidate if level == 0 else unify(current, candidate)
            if merged is not None:
                _grow(level + 1, merged)

    if order:
        _grow(0, EMPTY_MATCH)
    logger.debug("Grew %d complete matches in %d attempts", len(results), stats.attempts)
    return results
