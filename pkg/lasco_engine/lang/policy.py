"""Policy graphs and the policy file format.

A policy file holds one or more policies separated by blank lines. Each
line of a policy is either a node line or an edge line, fields separated by
single tab characters::

    # name: separation-of-duty
    n3	class="user" && team=$A	$A != $R
    n1 -> n2	name="request"
    n3 -> n2	name="approve"

The first predicate is the domain predicate, the second the requirement
predicate; both default to ``True``. Nodes are declared implicitly by edge
lines, so a node line is only needed for a non-trivial predicate.
"""

import logging
import re
from typing import NamedTuple

import networkx as nx

from lasco_engine.lang.predicate import (
    TRUE,
    PredExpr,
    parse_predicate,
    predicate_vars,
    render_predicate,
    structurally_equal,
)
from lasco_engine.settings import PolicyFormatError, PredicateSyntaxError

logger = logging.getLogger(__name__)

_NODE_NAME = re.compile(r"[A-Za-z0-9_]+")
_NAME_COMMENT = re.compile(r"#\s*name\s*:\s*(\S.*?)\s*$")

EDGE_PIECE = "edge"
NODE_PIECE = "isolated-node"


class PolicyEdge(NamedTuple):
    id: str
    src: str
    dst: str


class SemanticPiece(NamedTuple):
    """A policy edge with its endpoints, or an isolated policy node."""

    kind: str
    element_id: str

    def __str__(self) -> str:
        return self.element_id


class PolicyGraph(NamedTuple):
    """A policy: directed graph plus per-element domain and requirement predicates.

    Edge ids are ``src->dst``; parallel edges between the same pair get a
    ``#2``, ``#3`` ... suffix. Node names cannot contain ``-`` or ``>`` so the
    two id spaces never collide.
    """

    name: str
    nodes: tuple[str, ...]
    edges: tuple[PolicyEdge, ...]
    domain: dict[str, PredExpr]
    requirement: dict[str, PredExpr]
    variables: frozenset[str]

    @property
    def element_ids(self) -> tuple[str, ...]:
        return self.nodes + tuple(e.id for e in self.edges)

    def edge(self, edge_id: str) -> PolicyEdge:
        for e in self.edges:
            if e.id == edge_id:
                return e
        raise KeyError(edge_id)

    def isolated_nodes(self) -> tuple[str, ...]:
        touched = {e.src for e in self.edges} | {e.dst for e in self.edges}
        return tuple(n for n in self.nodes if n not in touched)

    def pieces(self) -> list[SemanticPiece]:
        return semantic_pieces(self)

    def graph(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.nodes)
        for e in self.edges:
            g.add_edge(e.src, e.dst, key=e.id)
        return g

    def components(self) -> list[frozenset[str]]:
        """Weakly connected components as sets of node names, in node order."""
        comps = [frozenset(c) for c in nx.weakly_connected_components(self.graph())]
        position = {n: i for i, n in enumerate(self.nodes)}
        return sorted(comps, key=lambda c: min(position[n] for n in c))

    def equivalent(self, other: "PolicyGraph") -> bool:
        """Structural equality that ignores redundant parentheses."""
        if (self.name, self.nodes, self.edges, self.variables) != (
            other.name, other.nodes, other.edges, other.variables,
        ):
            return False
        return all(
            structurally_equal(self.domain[k], other.domain[k])
            and structurally_equal(self.requirement[k], other.requirement[k])
            for k in self.element_ids
        )


def semantic_pieces(p: PolicyGraph) -> list[SemanticPiece]:
    """One piece per edge, then one per isolated node."""
    pieces = [SemanticPiece(EDGE_PIECE, e.id) for e in p.edges]
    pieces.extend(SemanticPiece(NODE_PIECE, n) for n in p.isolated_nodes())
    return pieces


def build_policy(
    name: str,
    nodes: dict[str, tuple[PredExpr, PredExpr]],
    edges: list[tuple[str, str, PredExpr, PredExpr]],
) -> PolicyGraph:
    """Assemble a :class:`PolicyGraph`, assigning edge ids and implicit nodes.

    Args:
        name: Policy name.
        nodes: Explicit node predicates, ``name -> (domain, requirement)``.
        edges: ``(src, dst, domain, requirement)`` in declaration order.
    """
    node_order: list[str] = []
    domain: dict[str, PredExpr] = {}
    requirement: dict[str, PredExpr] = {}

    def _declare(node: str) -> None:
        if node not in domain:
            node_order.append(node)
            domain[node], requirement[node] = nodes.get(node, (TRUE, TRUE))

    for node in nodes:
        _declare(node)

    policy_edges: list[PolicyEdge] = []
    seen_pairs: dict[tuple[str, str], int] = {}
    for src, dst, dom, req in edges:
        _declare(src)
        _declare(dst)
        count = seen_pairs.get((src, dst), 0) + 1
        seen_pairs[(src, dst)] = count
        edge_id = f"{src}->{dst}" if count == 1 else f"{src}->{dst}#{count}"
        policy_edges.append(PolicyEdge(edge_id, src, dst))
        domain[edge_id] = dom
        requirement[edge_id] = req

    variables = frozenset().union(
        *(predicate_vars(p) for p in domain.values()),
        *(predicate_vars(p) for p in requirement.values()),
    )
    return PolicyGraph(
        name=name,
        nodes=tuple(node_order),
        edges=tuple(policy_edges),
        domain=domain,
        requirement=requirement,
        variables=variables,
    )


# ── Parsing ────────────────────────────────────────────────────────

def parse_policy_file(text: str, source: str = "policy") -> list[PolicyGraph]:
    """Parse a policy file into its policies.

    Policies without a ``# name:`` comment are named ``<source>:<index>``
    (1-based).

    Raises:
        PolicyFormatError: On a malformed line, a bad node name, a predicate
            syntax error, or a duplicate explicit node line.
    """
    policies: list[PolicyGraph] = []
    block: list[tuple[int, str]] = []

    def _flush() -> None:
        if any(not line.lstrip().startswith("#") for _, line in block):
            policies.append(_parse_block(block, f"{source}:{len(policies) + 1}"))
        block.clear()

    for number, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            block.append((number, line.rstrip("\r")))
        else:
            _flush()
    _flush()

    logger.debug("Parsed %d policies from %s", len(policies), source)
    return policies


def _parse_block(lines: list[tuple[int, str]], default_name: str) -> PolicyGraph:
    name = default_name
    nodes: dict[str, tuple[PredExpr, PredExpr]] = {}
    edges: list[tuple[str, str, PredExpr, PredExpr]] = []

    for number, line in lines:
        if line.lstrip().startswith("#"):
            named = _NAME_COMMENT.match(line.strip())
            if named:
                name = named.group(1)
            continue

        fields = line.split("\t")
        if len(fields) > 3:
            raise PolicyFormatError(f"too many tab-separated fields ({len(fields)})", number)
        head = fields[0].strip()
        dom = _field_predicate(fields, 1, number)
        req = _field_predicate(fields, 2, number)

        if "->" in head:
            src, _, dst = head.partition("->")
            src, dst = _node_name(src, number), _node_name(dst, number)
            edges.append((src, dst, dom, req))
        else:
            node = _node_name(head, number)
            if node in nodes:
                raise PolicyFormatError(f"duplicate node line for {node!r}", number)
            nodes[node] = (dom, req)

    return build_policy(name, nodes, edges)


def _node_name(text: str, number: int) -> str:
    name = text.strip()
    if not _NODE_NAME.fullmatch(name):
        raise PolicyFormatError(f"invalid node name {name!r}", number)
    return name


def _field_predicate(fields: list[str], index: int, number: int) -> PredExpr:
    if index >= len(fields) or not fields[index].strip():
        return TRUE
    try:
        return parse_predicate(fields[index])
    except PredicateSyntaxError as exc:
        raise PolicyFormatError(f"predicate {fields[index].strip()!r}: {exc}", number) from None


# ── Rendering ──────────────────────────────────────────────────────

def render_policy(p: PolicyGraph) -> str:
    lines = [f"# name: {p.name}"]
    for node in p.nodes:
        lines.append(f"{node}\t{render_predicate(p.domain[node])}\t{render_predicate(p.requirement[node])}")
    for e in p.edges:
        lines.append(
            f"{e.src} -> {e.dst}\t{render_predicate(p.domain[e.id])}\t{render_predicate(p.requirement[e.id])}"
        )
    return "\n".join(lines)


def render_policy_file(policies: list[PolicyGraph]) -> str:
    return "\n\n".join(render_policy(p) for p in policies) + ("\n" if policies else "")
