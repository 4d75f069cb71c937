"""Variable conditions: bindings plus a residual condition over unbound variables."""

from typing import Mapping, NamedTuple, Optional

from lasco_engine.evaluation.folding import UNDEFINED, fold
from lasco_engine.evaluation.values import AttrValue, VarBindings, value_key, values_equal
from lasco_engine.lang.predicate import (
    AND,
    BINARY_OPERATORS,
    EQ,
    FALSE,
    LITERAL,
    NOT,
    PAREN,
    TRUE,
    VARNAME,
    PredExpr,
    binary,
    conjoin,
    is_true,
    iter_nodes,
    literal,
    negate,
    paren,
    render_predicate,
)


class VarConditions(NamedTuple):
    """Bound variables plus the condition still constraining unbound ones.

    The condition never contains attribute names.
    """

    bindings: Mapping[str, AttrValue]
    condition: PredExpr

    @property
    def true_expr(self) -> bool:
        return is_true(self.condition)

    @property
    def satisfiable(self) -> bool:
        return may_be_sat(self.condition)

    def key(self) -> tuple:
        """Hashable identity used to deduplicate matches."""
        return (
            tuple(sorted((name, value_key(value)) for name, value in self.bindings.items())),
            render_predicate(self.condition),
        )


TRUE_CONDITIONS = VarConditions({}, TRUE)
FALSE_CONDITIONS = VarConditions({}, FALSE)


def substitute_vars(p: PredExpr, b: Mapping[str, AttrValue]) -> PredExpr:
    """Replace every variable bound in ``b`` by a literal of its value."""
    if not b:
        return p
    label = p.label
    if label == VARNAME:
        return literal(b[p.operand1]) if p.operand1 in b else p
    if label == PAREN:
        inner = substitute_vars(p.operand1, b)
        return p if inner is p.operand1 else paren(inner)
    if label == NOT:
        inner = substitute_vars(p.operand1, b)
        return p if inner is p.operand1 else negate(inner)
    if label in BINARY_OPERATORS:
        left = substitute_vars(p.operand1, b)
        right = substitute_vars(p.operand2, b)
        if left is p.operand1 and right is p.operand2:
            return p
        return binary(label, left, right)
    return p


def has_vars(c: PredExpr) -> bool:
    return any(n.label == VARNAME for n in iter_nodes(c))


def may_be_sat(c: PredExpr) -> bool:
    return has_vars(c) or is_true(c)


def consistent_bindings(b1: Mapping[str, AttrValue], b2: Mapping[str, AttrValue]) -> bool:
    """True when the two binding sets agree on every shared variable."""
    if len(b2) < len(b1):
        b1, b2 = b2, b1
    return all(name not in b2 or values_equal(value, b2[name]) for name, value in b1.items())


def extract_bound(p: PredExpr) -> tuple[VarBindings, PredExpr]:
    """Pull ``$v = literal`` equalities out of conjunctive positions.

    Each extracted equality is replaced by literal true. Equalities beneath
    ``||``, ``!`` or any other operator are left alone. Two extractions that
    bind one variable to different values give ``({}, False)``.
    """
    found: VarBindings = {}
    conflict = False

    def _walk(node: PredExpr) -> PredExpr:
        nonlocal conflict
        if node.label == AND:
            left, right = _walk(node.operand1), _walk(node.operand2)
            if left is node.operand1 and right is node.operand2:
                return node
            return binary(AND, left, right)
        if node.label == PAREN:
            inner = _walk(node.operand1)
            if inner.label == LITERAL:
                return inner
            return node if inner is node.operand1 else paren(inner)
        pair = _binding_pair(node)
        if pair is None:
            return node
        name, value = pair
        if name in found and not values_equal(found[name], value):
            conflict = True
        found.setdefault(name, value)
        return TRUE

    remaining = _walk(p)
    if conflict:
        return {}, FALSE
    return found, remaining


def _binding_pair(node: PredExpr) -> Optional[tuple[str, AttrValue]]:
    if node.label != EQ:
        return None
    left, right = node.operand1, node.operand2
    if left.label == VARNAME and right.label == LITERAL:
        return left.operand1, right.operand1
    if right.label == VARNAME and left.label == LITERAL:
        return right.operand1, left.operand1
    return None


def reduce_cond(c: VarConditions) -> VarConditions:
    """Substitute, fold and extract until no new bindings appear.

    Returns ``({}, False)`` when the condition folds to anything but a
    satisfiable residual or literal true.
    """
    bindings = dict(c.bindings)
    condition = c.condition
    while True:
        folded = fold(substitute_vars(condition, bindings), simplify=True)
        if folded is UNDEFINED:
            return FALSE_CONDITIONS
        if folded.label == LITERAL:
            return VarConditions(bindings, TRUE) if is_true(folded) else FALSE_CONDITIONS
        extracted, remaining = extract_bound(folded)
        if remaining.label == LITERAL and not is_true(remaining):
            return FALSE_CONDITIONS
        if not extracted:
            return VarConditions(bindings, folded)
        if not consistent_bindings(bindings, extracted):
            return FALSE_CONDITIONS
        bindings.update(extracted)
        condition = remaining


def merge_conds(*conds: VarConditions) -> VarConditions:
    """Conjoin variable conditions, folding left; no arguments gives ``({}, True)``."""
    if not conds:
        return TRUE_CONDITIONS
    merged = reduce_cond(conds[0])
    for other in conds[1:]:
        if merged.condition.label == LITERAL and not merged.true_expr:
            return FALSE_CONDITIONS
        if not consistent_bindings(merged.bindings, other.bindings):
            return FALSE_CONDITIONS
        merged = reduce_cond(
            VarConditions(
                {**merged.bindings, **other.bindings},
                conjoin(merged.condition, other.condition),
            )
        )
    return merged
