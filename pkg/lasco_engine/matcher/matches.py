"""Partial matches of a policy graph onto a system graph, and their unification."""

from typing import Mapping, NamedTuple, Optional

from lasco_engine.evaluation.conditions import TRUE_CONDITIONS, VarConditions, merge_conds
from lasco_engine.evaluation.values import value_key
from lasco_engine.history.model import Time
from lasco_engine.lang.policy import EDGE_PIECE, PolicyEdge, PolicyGraph, SemanticPiece

NodeBinding = tuple[str, Time]


class PsMap(NamedTuple):
    """Where each matched policy element landed in the system graph.

    ``edge_map`` sends policy edges to event ids, ``node_map`` sends isolated
    policy nodes to ``(object id, time)`` snapshots, and ``incidental``
    records the endpoint snapshots of every matched edge per policy node.
    """

    edge_map: Mapping[str, str]
    node_map: Mapping[str, NodeBinding]
    incidental: Mapping[str, frozenset[NodeBinding]]


EMPTY_PS_MAP = PsMap({}, {}, {})


class PartialMatch(NamedTuple):
    ps_map: PsMap
    conds: VarConditions

    def binds(self, piece: SemanticPiece) -> bool:
        if piece.kind == EDGE_PIECE:
            return piece.element_id in self.ps_map.edge_map
        return piece.element_id in self.ps_map.node_map

    def is_complete(self, p: PolicyGraph) -> bool:
        return all(self.binds(piece) for piece in p.pieces())

    def key(self) -> tuple:
        """Identity of the match: its ps map and its variable conditions."""
        return (
            tuple(sorted(self.ps_map.edge_map.items())),
            tuple(sorted((n, o, value_key(t)) for n, (o, t) in self.ps_map.node_map.items())),
            self.conds.key(),
        )

    def map_key(self) -> tuple:
        """The ps-map part of :meth:`key`."""
        return self.key()[:2]


EMPTY_MATCH = PartialMatch(EMPTY_PS_MAP, TRUE_CONDITIONS)


def edge_match(edge: PolicyEdge, event_id: str, src: NodeBinding, dst: NodeBinding, conds: VarConditions) -> PartialMatch:
    incidental: dict[str, frozenset[NodeBinding]] = {edge.src: frozenset({src})}
    incidental[edge.dst] = incidental.get(edge.dst, frozenset()) | {dst}
    return PartialMatch(PsMap({edge.id: event_id}, {}, incidental), conds)


def node_match(node: str, snapshot: NodeBinding, conds: VarConditions) -> PartialMatch:
    return PartialMatch(PsMap({}, {node: snapshot}, {}), conds)


def _injective_union(a: Mapping, b: Mapping) -> Optional[dict]:
    merged = dict(a)
    for key, value in b.items():
        if key in merged:
            if merged[key] != value:
                return None
        else:
            merged[key] = value
    if len(set(merged.values())) != len(merged):
        return None
    return merged


def _incidental_union(
    a: Mapping[str, frozenset[NodeBinding]], b: Mapping[str, frozenset[NodeBinding]],
) -> Optional[dict[str, frozenset[NodeBinding]]]:
    merged = dict(a)
    for node, bound in b.items():
        combined = merged.get(node, frozenset()) | bound
        if len({object_id for object_id, _ in combined}) > 1:
            return None
        merged[node] = combined
    return merged


def combine_maps(a: PsMap, b: PsMap) -> Optional[PsMap]:
    """The union of two ps maps, or ``None`` when they are inconsistent.

    Consistent means both agree on every shared element, the combined edge
    and isolated-node maps stay one-to-one, and every policy node keeps a
    single object across its incidental bindings.
    """
    edges = _injective_union(a.edge_map, b.edge_map)
    if edges is None:
        return None
    nodes = _injective_union(a.node_map, b.node_map)
    if nodes is None:
        return None
    incidental = _incidental_union(a.incidental, b.incidental)
    if incidental is None:
        return None
    return PsMap(edges, nodes, incidental)


def unify(a: PartialMatch, b: PartialMatch) -> Optional[PartialMatch]:
    """Combine two partial matches; ``None`` unless they are unifiable."""
    ps_map = combine_maps(a.ps_map, b.ps_map)
    if ps_map is None:
        return None
    conds = merge_conds(a.conds, b.conds)
    if not conds.satisfiable:
        return None
    return PartialMatch(ps_map, conds)
