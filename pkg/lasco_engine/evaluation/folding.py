"""Constant folding with the undefined marker.

The fold is a single depth-first postorder pass. An attribute that is not
defined, or an operator applied to operands it cannot take, yields the
undefined marker. The marker propagates upward through every operator
except ``||``, where the other operand's value survives.
"""

import logging
from collections import Counter
from typing import Optional, Union

from lasco_engine.evaluation.values import MISMATCH, AttrSet, apply_operator
from lasco_engine.lang.predicate import (
    AND,
    ATTRNAME,
    BINARY_OPERATORS,
    FALSE,
    LITERAL,
    NOT,
    OR,
    PAREN,
    TRUE,
    PredExpr,
    binary,
    is_false,
    is_true,
    literal,
    negate,
    paren,
    render_value,
)

logger = logging.getLogger(__name__)


class _Undefined:
    __slots__ = ()

    def __repr__(self) -> str:
        return "UNDEFINED"


UNDEFINED = _Undefined()

Folded = Union[PredExpr, _Undefined]


class EvalWarnings:
    """Counts runtime type mismatches seen while folding."""

    def __init__(self) -> None:
        self.counts: Counter[str] = Counter()

    def record(self, message: str) -> None:
        if message not in self.counts:
            logger.warning("Type mismatch treated as undefined: %s", message)
        self.counts[message] += 1

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def clear(self) -> None:
        self.counts.clear()


eval_warnings = EvalWarnings()


def fold(p: PredExpr, attrs: Optional[AttrSet] = None, simplify: bool = False) -> Folded:
    """Fold ``p``, substituting attribute values from ``attrs``.

    Args:
        p: Expression to fold.
        attrs: Attribute values; ``None`` leaves attribute names in place,
            a mapping turns every missing attribute into :data:`UNDEFINED`.
        simplify: Also drop boolean literals next to an operand that still
            contains variables (``True && x`` is ``x``, ``False && x`` is
            ``False``, and dually for ``||``).

    Returns:
        The folded expression, or :data:`UNDEFINED`.
    """
    label = p.label
    if label == LITERAL:
        return p
    if label == ATTRNAME:
        if attrs is None:
            return p
        if p.operand1 in attrs:
            return literal(attrs[p.operand1])
        return UNDEFINED
    if label == PAREN:
        inner = fold(p.operand1, attrs, simplify)
        if inner is UNDEFINED or inner.label == LITERAL:
            return inner
        return p if inner is p.operand1 else paren(inner)
    if label == NOT:
        inner = fold(p.operand1, attrs, simplify)
        if inner is UNDEFINED:
            return inner
        if inner.label == LITERAL:
            if isinstance(inner.operand1, bool):
                return literal(not inner.operand1)
            eval_warnings.record(f"! {_show(inner)}")
            return UNDEFINED
        return p if inner is p.operand1 else negate(inner)
    if label not in BINARY_OPERATORS:
        return p

    left = fold(p.operand1, attrs, simplify)
    right = fold(p.operand2, attrs, simplify)
    if label == OR:
        if left is UNDEFINED:
            return right
        if right is UNDEFINED:
            return left
    elif left is UNDEFINED or right is UNDEFINED:
        return UNDEFINED

    if left.label == LITERAL and right.label == LITERAL:
        result = apply_operator(label, left.operand1, right.operand1)
        if result is MISMATCH:
            eval_warnings.record(f"{_show(left)} {label} {_show(right)}")
            return UNDEFINED
        return literal(result)

    if simplify:
        if label == AND:
            if is_false(left) or is_false(right):
                return FALSE
            if is_true(left):
                return right
            if is_true(right):
                return left
        elif label == OR:
            if is_true(left) or is_true(right):
                return TRUE
            if is_false(left):
                return right
            if is_false(right):
                return left

    if left is p.operand1 and right is p.operand2:
        return p
    return binary(label, left, right)


def fold_constants(p: PredExpr) -> PredExpr:
    """Replace every all-literal subtree with its value.

    An operator applied to operands it cannot take has no value; if that
    reaches the top the result is literal false.
    """
    folded = fold(p)
    return FALSE if folded is UNDEFINED else folded


def _show(p: PredExpr) -> str:
    try:
        return render_value(p.operand1)
    except (TypeError, ValueError):
        return repr(p.operand1)
