"""Predicate evaluation: predicate + attributes + bindings -> variable conditions.

Steps, in order:

1. substitute bound variables and attribute values;
2. replace undefined attributes with the undefined marker;
3. fold constants in one postorder pass;
4. extract ``$v = literal`` bindings, substitute them and fold again,
   repeating until no new bindings appear.
"""

from typing import Mapping

from lasco_engine.evaluation.conditions import VarConditions, reduce_cond, substitute_vars
from lasco_engine.evaluation.folding import UNDEFINED, fold
from lasco_engine.evaluation.values import AttrValue
from lasco_engine.lang.predicate import FALSE, LITERAL, TRUE, PredExpr, is_true


def eval_pred(p: PredExpr, attrs: Mapping[str, AttrValue], b: Mapping[str, AttrValue]) -> VarConditions:
    """The variable conditions under which ``p`` holds for ``attrs`` given ``b``. Never raises."""
    folded = fold(substitute_vars(p, b), attrs)
    if folded is UNDEFINED:
        return VarConditions(dict(b), FALSE)
    if folded.label == LITERAL:
        return VarConditions(dict(b), TRUE if is_true(folded) else FALSE)
    return reduce_cond(VarConditions(dict(b), folded))


def residualize(p: PredExpr, attrs: Mapping[str, AttrValue]) -> PredExpr:
    """Fold ``p`` against ``attrs`` but keep every variable, without extracting bindings.

    The result contains no attribute names; substituting complete bindings
    and folding again gives the same truth value as :func:`eval_pred` would
    have with those bindings.
    """
    folded = fold(p, attrs)
    if folded is UNDEFINED:
        return FALSE
    return folded


def requirement_holds(p: PredExpr, attrs: Mapping[str, AttrValue], b: Mapping[str, AttrValue]) -> bool:
    return eval_pred(p, attrs, b).true_expr
