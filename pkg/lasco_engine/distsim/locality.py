"""Locality of policy nodes and edges relative to one engine's hosts."""

from typing import Iterable, NamedTuple, Optional

from lasco_engine.lang.lint import conjunctive_terms
from lasco_engine.lang.policy import EDGE_PIECE, PolicyGraph, SemanticPiece
from lasco_engine.lang.predicate import ATTRNAME, EQ, LITERAL, PredExpr

LOCAL = "local"
NON_LOCAL = "non-local"
HALF_LOCAL = "half-local"
GENERAL = "general"

HOST_ATTRS = frozenset({"id", "name"})


class Locality(NamedTuple):
    nodes: dict[str, str]
    edges: dict[str, str]

    def of(self, piece: SemanticPiece) -> str:
        if piece.kind == EDGE_PIECE:
            return self.edges[piece.element_id]
        return self.nodes[piece.element_id]


def anchored_host(p: PredExpr) -> Optional[str]:
    """The host named by a ``name = "h"`` or ``id = "h"`` term in conjunctive position."""
    for term in conjunctive_terms(p):
        if term.label != EQ:
            continue
        for left, right in ((term.operand1, term.operand2), (term.operand2, term.operand1)):
            if (
                left.label == ATTRNAME and left.operand1 in HOST_ATTRS
                and right.label == LITERAL and isinstance(right.operand1, str)
            ):
                return right.operand1
    return None


def _edge_locality(src: str, dst: str) -> str:
    if src == LOCAL and dst == LOCAL:
        return LOCAL
    if src == NON_LOCAL and dst == NON_LOCAL:
        return NON_LOCAL
    if LOCAL in (src, dst) and NON_LOCAL in (src, dst):
        return HALF_LOCAL
    return GENERAL


def classify_locality(p: PolicyGraph, scope: Iterable[str], known_hosts: Iterable[str]) -> Locality:
    """Classify every node and edge of ``p`` for an engine seeing the hosts in ``scope``.

    A node anchored to a host is local when the host is in scope and
    non-local when it is a known host outside it; every other node is
    general.
    """
    scope = set(scope)
    outside = set(known_hosts) - scope
    nodes: dict[str, str] = {}
    for node in p.nodes:
        host = anchored_host(p.domain[node])
        if host in scope:
            nodes[node] = LOCAL
        elif host in outside:
            nodes[node] = NON_LOCAL
        else:
            nodes[node] = GENERAL
    edges = {e.id: _edge_locality(nodes[e.src], nodes[e.dst]) for e in p.edges}
    return Locality(nodes, edges)
