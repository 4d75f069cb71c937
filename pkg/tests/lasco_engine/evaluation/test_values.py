"""Tests for lasco_engine.evaluation.values: operator semantics on literal values."""

from decimal import Decimal

import pytest

from lasco_engine.evaluation.values import (
    MISMATCH,
    apply_operator,
    normalize_number,
    value_key,
    value_kind,
    values_equal,
)


class TestValueKinds:
    @pytest.mark.parametrize(
        "value, kind",
        [(True, "boolean"), (3, "number"), (Decimal("2.5"), "number"), ("x", "string"), (frozenset(), "set")],
    )
    def test_kinds(self, value, kind):
        assert value_kind(value) == kind

    def test_rejects_other_types(self):
        with pytest.raises(TypeError):
            value_kind([1, 2])

    def test_normalize_integral_decimal(self):
        assert normalize_number(Decimal("4.0")) == 4
        assert isinstance(normalize_number(Decimal("4.0")), int)
        assert normalize_number(Decimal("4.5")) == Decimal("4.5")


class TestEquality:
    def test_numbers_compare_numerically(self):
        assert values_equal(1, Decimal("1.0"))

    def test_booleans_are_not_numbers(self):
        assert not values_equal(True, 1)
        assert value_key(True) != value_key(1)

    def test_cross_type_is_unequal_not_an_error(self):
        assert apply_operator("=", "3", 3) is False
        assert apply_operator("!=", "3", 3) is True

    def test_sets_ignore_order(self):
        assert values_equal(frozenset({"a", "b"}), frozenset({"b", "a"}))
        assert not values_equal(frozenset({1}), frozenset({True}))


class TestApplyOperator:
    @pytest.mark.parametrize(
        "op, a, b, expected",
        [
            (">", 4, 1, True),
            ("<=", Decimal("1.5"), 2, True),
            (">=", "secret", "unclassified", False),
            ("<", "B", "a", True),
            ("+", 2, 3, 5),
            ("-", 2, 5, -3),
            ("*", Decimal("1.5"), 2, 3),
            ("/", 7, 2, Decimal("3.5")),
            ("/", 6, 3, 2),
            ("%", 7, 3, 1),
            ("&&", True, False, False),
            ("||", True, False, True),
            ("in", "a", frozenset({"a", "b"}), True),
            ("in", 1, frozenset({True}), False),
            ("pcont", frozenset({1}), frozenset({1, 2}), True),
            ("pcont", frozenset({1, 2}), frozenset({1, 2}), False),
            ("cont", frozenset({1, 2}), frozenset({1, 2}), True),
            ("union", frozenset({1}), frozenset({2}), frozenset({1, 2})),
            ("intersect", frozenset({1, 2}), frozenset({2, 3}), frozenset({2})),
        ],
    )
    def test_operators(self, op, a, b, expected):
        result = apply_operator(op, a, b)
        assert values_equal(result, expected)

    @pytest.mark.parametrize(
        "op, a, b",
        [
            ("<", 3, "x"),
            (">", True, False),
            ("+", "a", 1),
            ("/", 1, 0),
            ("%", 1, 0),
            ("&&", 1, True),
            ("in", "a", "abc"),
            ("in", frozenset({1}), frozenset({1})),
            ("union", 1, frozenset({1})),
        ],
    )
    def test_mismatch(self, op, a, b):
        assert apply_operator(op, a, b) is MISMATCH

    def test_unknown_operator(self):
        with pytest.raises(ValueError):
            apply_operator("xor", True, True)
