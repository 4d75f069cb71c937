"""Tests for lasco_engine.matcher.matches: partial matches and their unification."""

from lasco_engine.evaluation.conditions import TRUE_CONDITIONS, VarConditions
from lasco_engine.lang.policy import EDGE_PIECE, NODE_PIECE, SemanticPiece, parse_policy_file
from lasco_engine.lang.predicate import TRUE, parse_predicate
from lasco_engine.matcher.matches import (
    EMPTY_MATCH,
    PsMap,
    combine_maps,
    edge_match,
    node_match,
    unify,
)


def _make_policy(text: str):
    return parse_policy_file(text, source="t")[0]


def _make_match(policy_edge: str, event_id: str, src, dst, condition: str = "True"):
    p = _make_policy(policy_edge.replace("->", " -> ") + "\n")
    return edge_match(p.edges[0], event_id, src, dst, VarConditions({}, parse_predicate(condition)))


def _bound(**bindings) -> VarConditions:
    return VarConditions(bindings, TRUE)


# ── Construction ─────────────────────────────────────────────────


class TestPartialMatch:
    def test_edge_match_records_endpoints(self):
        m = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        assert m.ps_map.edge_map == {"a->b": "e1"}
        assert m.ps_map.node_map == {}
        assert m.ps_map.incidental == {"a": frozenset({("A", 1)}), "b": frozenset({("B", 1)})}

    def test_self_loop_has_one_incidental_entry(self):
        m = _make_match("a->a", "e1", ("A", 3), ("A", 3))
        assert m.ps_map.incidental == {"a": frozenset({("A", 3)})}

    def test_node_match(self):
        m = node_match("n", ("O", 2), _bound(x=1))
        assert m.ps_map == PsMap({}, {"n": ("O", 2)}, {})
        assert m.conds.bindings == {"x": 1}

    def test_binds(self):
        m = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        assert m.binds(SemanticPiece(EDGE_PIECE, "a->b"))
        assert not m.binds(SemanticPiece(EDGE_PIECE, "b->c"))
        assert not m.binds(SemanticPiece(NODE_PIECE, "a"))
        assert node_match("a", ("A", 1), TRUE_CONDITIONS).binds(SemanticPiece(NODE_PIECE, "a"))

    def test_is_complete(self):
        p = _make_policy("a -> b\nlonely\n")
        edge_only = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        assert not edge_only.is_complete(p)
        both = unify(edge_only, node_match("lonely", ("L", 0), TRUE_CONDITIONS))
        assert both.is_complete(p)

    def test_key_includes_conditions(self):
        first = node_match("n", ("O", 2), _bound(x=1))
        second = node_match("n", ("O", 2), _bound(x=2))
        assert first.key() != second.key()
        assert first.map_key() == second.map_key()

    def test_key_ignores_incidental_bindings(self):
        first = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        second = first._replace(ps_map=first.ps_map._replace(incidental={}))
        assert first.key() == second.key()


# ── Unification ──────────────────────────────────────────────────


class TestUnify:
    def test_shared_node_must_be_same_object(self):
        first = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        other = _make_match("b->c", "e2", ("X", 2), ("C", 2))
        assert combine_maps(first.ps_map, other.ps_map) is None

    def test_shared_node_may_differ_in_time(self):
        first = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        other = _make_match("b->c", "e2", ("B", 2), ("C", 2))
        merged = unify(first, other)
        assert merged.ps_map.incidental["b"] == frozenset({("B", 1), ("B", 2)})

    def test_edge_map_is_injective(self):
        first = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        other = _make_match("c->d", "e1", ("A", 1), ("B", 1))
        assert unify(first, other) is None

    def test_same_edge_same_event_is_kept(self):
        first = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        merged = unify(first, first)
        assert merged.ps_map.edge_map == {"a->b": "e1"}

    def test_same_edge_different_events(self):
        first = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        other = _make_match("a->b", "e2", ("A", 2), ("B", 2))
        assert unify(first, other) is None

    def test_isolated_node_map_is_injective(self):
        first = node_match("m", ("O", 1), TRUE_CONDITIONS)
        other = node_match("n", ("O", 1), TRUE_CONDITIONS)
        assert unify(first, other) is None
        assert unify(first, node_match("n", ("O", 2), TRUE_CONDITIONS)) is not None

    def test_distinct_policy_nodes_may_share_an_object(self):
        first = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        other = _make_match("c->d", "e2", ("A", 2), ("B", 2))
        assert unify(first, other) is not None

    def test_bindings_are_merged(self):
        merged = unify(node_match("m", ("O", 1), _bound(x=1)), node_match("n", ("P", 1), _bound(y="u")))
        assert merged.conds.bindings == {"x": 1, "y": "u"}
        assert merged.conds.true_expr

    def test_conflicting_bindings(self):
        assert unify(node_match("m", ("O", 1), _bound(x=1)), node_match("n", ("P", 1), _bound(x=2))) is None

    def test_residual_condition_is_resolved(self):
        first = _make_match("a->b", "e1", ("A", 1), ("B", 1), "$x > 1")
        merged = unify(first, node_match("n", ("P", 1), _bound(x=5)))
        assert merged.conds.true_expr
        assert merged.conds.bindings == {"x": 5}
        assert unify(first, node_match("n", ("P", 1), _bound(x=0))) is None

    def test_unsatisfiable_conditions(self):
        first = _make_match("a->b", "e1", ("A", 1), ("B", 1), "$x = 1")
        other = _make_match("c->d", "e2", ("C", 2), ("D", 2), "$x = 2")
        assert unify(first, other) is None

    def test_empty_match_is_neutral(self):
        m = _make_match("a->b", "e1", ("A", 1), ("B", 1))
        assert unify(EMPTY_MATCH, m).key() == m.key()
