"""Tests for lasco_engine.lang.predicate: grammar, trees and rendering."""

import itertools
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lasco_engine.lang.predicate import (
    ADD,
    AND,
    BINARY_OPERATORS,
    EQ,
    FALSE,
    IN,
    LE,
    MUL,
    NE,
    OR,
    PRECEDENCE,
    SUB,
    TRUE,
    attr,
    binary,
    conjoin,
    literal,
    negate,
    paren,
    parse_predicate,
    predicate_attrs,
    predicate_vars,
    render_predicate,
    render_value,
    strip_parens,
    structurally_equal,
    var,
)
from lasco_engine.settings import PredicateSyntaxError


# ── Parsing ──────────────────────────────────────────────────────


class TestParsePredicate:
    def test_anchor_conjunction(self):
        p = parse_predicate('class="user" && team=$R')
        assert p == binary(
            AND,
            binary(EQ, attr("class"), literal("user")),
            binary(EQ, attr("team"), var("R")),
        )

    def test_multiplication_binds_tighter_than_addition(self):
        assert parse_predicate("a + b * c") == binary(ADD, attr("a"), binary(MUL, attr("b"), attr("c")))

    def test_binary_operators_associate_left(self):
        assert parse_predicate("a - b - c") == binary(SUB, binary(SUB, attr("a"), attr("b")), attr("c"))

    @pytest.mark.parametrize("first, second", list(itertools.product(sorted(PRECEDENCE), repeat=2)))
    def test_every_operator_pair_groups_by_level(self, first, second):
        p = parse_predicate(f"x {first} y {second} z")
        if PRECEDENCE[first] >= PRECEDENCE[second]:
            assert p == binary(second, binary(first, attr("x"), attr("y")), attr("z"))
        else:
            assert p == binary(first, attr("x"), binary(second, attr("y"), attr("z")))
        assert parse_predicate(render_predicate(p)) == p

    def test_and_or_share_one_level(self):
        p = parse_predicate("a = 1 || b = 2 && c = 3")
        assert p.label == AND
        assert p.operand1.label == OR

    def test_parentheses_are_kept(self):
        p = parse_predicate("a - (b - c)")
        assert p == binary(SUB, attr("a"), paren(binary(SUB, attr("b"), attr("c"))))

    def test_unicode_spellings(self):
        ascii_form = parse_predicate('a <= 3 && b != "x" && !c')
        unicode_form = parse_predicate('a ≤ 3 ∧ b ≠ "x" ∧ ¬c')
        assert structurally_equal(ascii_form, unicode_form)

    def test_membership(self):
        p = parse_predicate('command in {"su", "sudo"}')
        assert p.label == IN
        assert p.operand2 == literal(frozenset({"su", "sudo"}))

    def test_empty_set_literal(self):
        assert parse_predicate("{}") == literal(frozenset())

    def test_negative_literal(self):
        assert parse_predicate("a = -3") == binary(EQ, attr("a"), literal(-3))

    def test_decimal_literal(self):
        assert parse_predicate("1.5").operand1 == Decimal("1.5")

    def test_integer_literal_stays_int(self):
        value = parse_predicate("42").operand1
        assert value == 42
        assert isinstance(value, int)

    def test_booleans_are_case_insensitive(self):
        assert parse_predicate("true") == TRUE
        assert parse_predicate("FALSE") == FALSE

    def test_attribute_starting_with_true(self):
        assert parse_predicate("trueish") == attr("trueish")

    def test_variable_names_may_start_with_digit(self):
        assert parse_predicate("$1 = a") == binary(EQ, var("1"), attr("a"))

    @pytest.mark.parametrize("text", ["a = ", "a = \"open", "a ~ b", "(a = 1", "&& a"])
    def test_syntax_errors(self, text):
        with pytest.raises(PredicateSyntaxError) as info:
            parse_predicate(text)
        assert info.value.line >= 1
        assert info.value.column >= 1

    def test_unterminated_string_message(self):
        with pytest.raises(PredicateSyntaxError, match="unterminated string"):
            parse_predicate('name = "guest')


# ── Tree helpers ─────────────────────────────────────────────────


class TestTreeHelpers:
    def test_attrs_and_vars(self):
        p = parse_predicate('class="user" && team=$R && level > $L')
        assert predicate_attrs(p) == {"class", "team", "level"}
        assert predicate_vars(p) == {"R", "L"}

    def test_conjoin_drops_true(self):
        a = parse_predicate("a = 1")
        assert conjoin(TRUE, a) == a
        assert conjoin(a, TRUE) == a
        assert conjoin(a, a).label == AND

    def test_strip_parens(self):
        assert strip_parens(parse_predicate("((a)) = (1)")) == binary(EQ, attr("a"), literal(1))

    def test_structural_equality_keeps_booleans_apart_from_numbers(self):
        assert not structurally_equal(literal(True), literal(1))
        assert structurally_equal(literal(Decimal("1.50")), literal(Decimal("1.5")))

    def test_binary_rejects_unknown_operator(self):
        with pytest.raises(ValueError):
            binary("xor", TRUE, FALSE)


# ── Rendering ────────────────────────────────────────────────────


class TestRender:
    def test_spaces_around_operators(self):
        assert render_predicate(parse_predicate('class="user"&&team=$R')) == 'class = "user" && team = $R'

    def test_minimal_parentheses(self):
        p = binary(MUL, binary(ADD, attr("a"), attr("b")), attr("c"))
        assert render_predicate(p) == "(a + b) * c"

    def test_right_operand_of_same_level_is_parenthesised(self):
        p = binary(SUB, attr("a"), binary(SUB, attr("b"), attr("c")))
        assert render_predicate(p) == "a - (b - c)"

    def test_negation_of_compound(self):
        assert render_predicate(negate(binary(EQ, attr("target"), literal("root")))) == '!(target = "root")'

    def test_explicit_parens_survive(self):
        assert render_predicate(parse_predicate("(a)")) == "(a)"

    @pytest.mark.parametrize(
        "value, text",
        [
            (True, "True"),
            (False, "False"),
            (7, "7"),
            (Decimal("1.50"), "1.50"),
            ("user", '"user"'),
            (frozenset({2, 1}), "{1, 2}"),
        ],
    )
    def test_render_value(self, value, text):
        assert render_value(value) == text

    def test_string_with_quote_cannot_be_rendered(self):
        with pytest.raises(ValueError):
            render_value('say "hi"')


# ── Round trip ───────────────────────────────────────────────────

_leaves = st.one_of(
    st.integers(min_value=0, max_value=99).map(literal),
    st.sampled_from(["user", "file", "x y"]).map(literal),
    st.booleans().map(literal),
    st.sampled_from(["a", "b", "name"]).map(attr),
    st.sampled_from(["X", "Y"]).map(var),
)

_trees = st.recursive(
    _leaves,
    lambda children: st.one_of(
        children.map(negate),
        st.tuples(st.sampled_from(sorted(BINARY_OPERATORS)), children, children).map(
            lambda t: binary(t[0], t[1], t[2])
        ),
    ),
    max_leaves=8,
)


class TestRoundTrip:
    @given(_trees)
    @settings(max_examples=200, deadline=None)
    def test_render_then_parse(self, tree):
        assert structurally_equal(parse_predicate(render_predicate(tree)), tree)

    @pytest.mark.parametrize(
        "text",
        [
            'class="user" && team=$R',
            "$A != $R",
            "$UL >= $FL",
            'groups pcont {"wheel", "staff"} || !(level <= 2)',
            "(a + b) % 3 = 0",
            "x union y intersect z cont w",
        ],
    )
    def test_text_round_trip(self, text):
        p = parse_predicate(text)
        assert structurally_equal(parse_predicate(render_predicate(p)), p)

    def test_le_and_ne_render_ascii(self):
        p = binary(AND, binary(LE, attr("a"), literal(3)), binary(NE, attr("b"), literal("x")))
        assert render_predicate(p) == 'a <= 3 && b != "x"'
