"""Tests for lasco_engine.matcher.initial: single-piece matches."""

from lasco_engine.history.graph import build_system_graph
from lasco_engine.history.lsh import parse_history
from lasco_engine.lang.policy import EDGE_PIECE, NODE_PIECE, SemanticPiece, parse_policy_file
from lasco_engine.lang.predicate import FALSE, TRUE, parse_predicate
from lasco_engine.matcher.initial import initial_matches, match_edge, match_edge_area, match_node
from lasco_engine.settings import MatchOptions


def _make_policy(text: str):
    return parse_policy_file(text, source="t")[0]


def _make_graph(text: str):
    return build_system_graph(parse_history(text))


def _counts(found) -> dict[str, int]:
    return {piece.element_id: len(matches) for piece, matches in found.items()}


class TestMatchFunctions:
    def test_anchor_with_binding(self, p1, s1):
        conds = match_node(p1.domain["n1"], s1.effective_attrs("Ujoe", 4), {"R": "team1"})
        assert (conds.bindings, conds.condition) == ({"R": "team1"}, TRUE)

    def test_true_node(self, s1):
        conds = match_node(TRUE, s1.effective_attrs("P57", 4), {})
        assert (conds.bindings, conds.condition) == ({}, TRUE)

    def test_wrong_class(self, p1):
        assert match_node(p1.domain["n2"], {"class": "user"}, {}).condition == FALSE

    def test_edge(self, p1, s1):
        conds = match_edge(p1.domain["n1->n2"], s1.event("req_4").attrs, {})
        assert (conds.bindings, conds.condition) == ({}, TRUE)
        assert match_edge(parse_predicate('name = "approve"'), s1.event("req_4").attrs, {}).condition == FALSE

    def test_edge_area(self, p1, s1):
        conds = match_edge_area(p1.edge("n1->n2"), s1.event("req_4"), p1, s1)
        assert (conds.bindings, conds.condition) == ({"R": "team1"}, TRUE)

    def test_edge_area_wrong_name(self, p1, s1):
        assert match_edge_area(p1.edge("n3->n2"), s1.event("req_4"), p1, s1).condition == FALSE

    def test_edge_area_all_true(self, s1):
        p = _make_policy("a -> b\n")
        conds = match_edge_area(p.edge("a->b"), s1.event("appr_40"), p, s1)
        assert (conds.bindings, conds.condition) == ({}, TRUE)

    def test_endpoints_use_attributes_at_event_time(self):
        g = _make_graph(
            'snapshot 1 u level=1\nsnapshot 1 f\nsnapshot 5 u level=3\n'
            "event 2 early u -> f\nevent 6 late u -> f\n"
        )
        p = _make_policy("u\tlevel > 2\nu -> f\n")
        assert match_edge_area(p.edge("u->f"), g.event("early"), p, g).condition == FALSE
        assert match_edge_area(p.edge("u->f"), g.event("late"), p, g).condition == TRUE


class TestInitialMatches:
    def test_separation_of_duty(self, p1, s1):
        found = initial_matches(p1, s1)
        assert _counts(found) == {"n1->n2": 1, "n3->n2": 1}
        (match,) = found[SemanticPiece(EDGE_PIECE, "n1->n2")]
        assert match.ps_map.edge_map == {"n1->n2": "req_4"}
        assert match.ps_map.incidental == {"n1": frozenset({("Ujoe", 4)}), "n2": frozenset({("P57", 4)})}

    def test_unconstrained_edge_matches_every_event(self):
        text = "snapshot 0 a\nsnapshot 0 b\n" + "".join(f"event 1 e{i} a -> b\n" for i in range(7))
        assert _counts(initial_matches(_make_policy("x -> y\n"), _make_graph(text))) == {"x->y": 7}

    def test_edge_hint_is_exhaustive(self, s1):
        p = _make_policy("a -> b\n")
        found = initial_matches(p, s1, MatchOptions(edge_hints={"a->b": ["req_4"]}))
        assert [m.ps_map.edge_map["a->b"] for m in found[SemanticPiece(EDGE_PIECE, "a->b")]] == ["req_4"]

    def test_unknown_hint_is_skipped(self, s1, caplog):
        p = _make_policy("a -> b\n")
        found = initial_matches(p, s1, MatchOptions(edge_hints={"a->b": ["nope", "appr_40"]}))
        assert len(found[SemanticPiece(EDGE_PIECE, "a->b")]) == 1
        assert "unknown event 'nope'" in caplog.text

    def test_isolated_node_per_snapshot(self, s1):
        p = _make_policy('x\tclass = "user"\n')
        assert _counts(initial_matches(p, s1)) == {"x": 6}

    def test_node_hint(self, s1):
        p = _make_policy('x\tclass = "user"\n')
        found = initial_matches(p, s1, MatchOptions(node_hints={"x": [("Ujoe", 4), ("P57", 4)]}))
        assert [m.ps_map.node_map["x"] for m in found[SemanticPiece(NODE_PIECE, "x")]] == [("Ujoe", 4)]

    def test_self_loop_needs_self_event(self):
        g = _make_graph("snapshot 0 a\nsnapshot 0 b\nevent 1 e1 a -> a\nevent 1 e2 a -> b\n")
        found = initial_matches(_make_policy("n -> n\n"), g)
        (match,) = found[SemanticPiece(EDGE_PIECE, "n->n")]
        assert match.ps_map.edge_map == {"n->n": "e1"}
        assert match.ps_map.incidental == {"n": frozenset({("a", 1)})}

    def test_new_only(self, s1):
        p = _make_policy("a -> b\n")
        s1.append([], [s1.event("req_4").model_copy(update={"event_id": "again"})])
        found = initial_matches(p, s1, MatchOptions(new_only=0))
        assert [m.ps_map.edge_map["a->b"] for m in found[SemanticPiece(EDGE_PIECE, "a->b")]] == ["again"]
