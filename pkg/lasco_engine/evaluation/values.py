"""Attribute values and operator semantics.

Values are numbers (``int`` or ``Decimal``; integers stay exact), strings,
booleans, or ``frozenset`` of scalars. Booleans are never numbers here, even
though Python treats ``True == 1``.

:func:`apply_operator` returns :data:`MISMATCH` when an operator cannot be
applied to its operands (``3 < "x"``, division by zero, ...); callers treat
that like an undefined attribute.
"""

from decimal import Decimal, DivisionByZero, InvalidOperation
from typing import Any, Union

Number = Union[int, Decimal]
AttrValue = Union[Number, str, bool, frozenset]
AttrSet = dict[str, AttrValue]
VarBindings = dict[str, AttrValue]


class _Mismatch:
    __slots__ = ()

    def __repr__(self) -> str:
        return "MISMATCH"


MISMATCH = _Mismatch()


def value_kind(value: Any) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, Decimal)):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, frozenset):
        return "set"
    raise TypeError(f"not an attribute value: {value!r}")


def normalize_number(value: Number) -> Number:
    if isinstance(value, Decimal) and value == value.to_integral_value():
        return int(value)
    return value


def _tagged(value: AttrValue) -> tuple[str, Any]:
    return (value_kind(value), value)


def set_members(value: frozenset) -> frozenset:
    """Members tagged with their kind so ``True`` and ``1`` stay distinct."""
    return frozenset(_tagged(v) for v in value)


def values_equal(a: AttrValue, b: AttrValue) -> bool:
    kind = value_kind(a)
    if kind != value_kind(b):
        return False
    if kind == "set":
        return set_members(a) == set_members(b)
    return a == b


def value_key(value: AttrValue) -> tuple:
    """Hashable key with the same equality as :func:`values_equal`."""
    kind = value_kind(value)
    if kind == "set":
        return (kind, set_members(value))
    return (kind, value)


def _untag(members: frozenset) -> frozenset:
    return frozenset(v for _, v in members)


def _compare(op: str, a: Any, b: Any) -> Any:
    kind = value_kind(a)
    if kind != value_kind(b) or kind not in ("number", "string"):
        return MISMATCH
    if kind == "string":
        a, b = a.encode("utf-8"), b.encode("utf-8")
    if op == "<":
        return a < b
    if op == ">":
        return a > b
    if op == "<=":
        return a <= b
    return a >= b


def _arithmetic(op: str, a: Any, b: Any) -> Any:
    if value_kind(a) != "number" or value_kind(b) != "number":
        return MISMATCH
    try:
        if op == "+":
            result = a + b
        elif op == "-":
            result = a - b
        elif op == "*":
            result = a * b
        elif op == "/":
            if b == 0:
                return MISMATCH
            result = Decimal(a) / Decimal(b)
        else:
            if b == 0:
                return MISMATCH
            result = Decimal(a) % Decimal(b)
    except (InvalidOperation, DivisionByZero):
        return MISMATCH
    return normalize_number(result) if isinstance(result, Decimal) else result


def _set_operation(op: str, a: Any, b: Any) -> Any:
    if op == "in":
        if value_kind(b) != "set" or value_kind(a) == "set":
            return MISMATCH
        return _tagged(a) in set_members(b)
    if value_kind(a) != "set" or value_kind(b) != "set":
        return MISMATCH
    left, right = set_members(a), set_members(b)
    if op == "pcont":
        return left < right
    if op == "cont":
        return left <= right
    if op == "union":
        return _untag(left | right)
    return _untag(left & right)


def apply_operator(op: str, a: AttrValue, b: AttrValue) -> Any:
    """Apply a binary operator to two literal values."""
    if op == "=":
        return values_equal(a, b)
    if op == "!=":
        return not values_equal(a, b)
    if op in ("&&", "||"):
        if not isinstance(a, bool) or not isinstance(b, bool):
            return MISMATCH
        return (a and b) if op == "&&" else (a or b)
    if op in ("<", ">", "<=", ">="):
        return _compare(op, a, b)
    if op in ("+", "-", "*", "/", "%"):
        return _arithmetic(op, a, b)
    if op in ("in", "pcont", "cont", "union", "intersect"):
        return _set_operation(op, a, b)
    raise ValueError(f"unknown operator {op!r}")
