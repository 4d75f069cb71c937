"""Well-formedness checks for policies.

Errors:

* ``unanchored-variable`` - a variable never appears in an anchor
  ``$v = <attribute or literal>`` in conjunctive position of a domain
  predicate, so a match could not bind it to a single value.
* ``attribute-in-node-requirement`` - node requirement predicates are
  evaluated against variable bindings only.
* ``type-mismatch`` - an operator applied to a literal of a kind it can
  never accept.

Warnings:

* ``mixed-logic`` - ``&&`` and ``||`` share a precedence level, so mixing
  them without parentheses is easy to misread.
"""

from typing import Iterator, Literal, Optional

from pydantic import BaseModel

from lasco_engine.evaluation.values import MISMATCH, apply_operator, value_kind
from lasco_engine.lang.policy import PolicyGraph
from lasco_engine.lang.predicate import (
    AND,
    ATTRNAME,
    BINARY_OPERATORS,
    EQ,
    LITERAL,
    NOT,
    OR,
    PAREN,
    VARNAME,
    PredExpr,
    iter_nodes,
    render_value,
)

# ── Data Models ────────────────────────────────────────────────────

class PolicyDiagnostic(BaseModel):
    policy: str = ""
    severity: Literal["error", "warning"]
    code: str
    element_id: str = ""
    message: str

    def __str__(self) -> str:
        where = f"{self.policy}:{self.element_id}" if self.element_id else self.policy
        return f"{where}: {self.severity}: {self.code}: {self.message}"


# Operand kinds each operator accepts; None means "any".
_OPERAND_KINDS: dict[str, tuple[Optional[set[str]], Optional[set[str]]]] = {
    AND: ({"boolean"}, {"boolean"}),
    OR: ({"boolean"}, {"boolean"}),
    "<": ({"number", "string"}, {"number", "string"}),
    ">": ({"number", "string"}, {"number", "string"}),
    "<=": ({"number", "string"}, {"number", "string"}),
    ">=": ({"number", "string"}, {"number", "string"}),
    "in": ({"number", "string", "boolean"}, {"set"}),
    "pcont": ({"set"}, {"set"}),
    "cont": ({"set"}, {"set"}),
    "union": ({"set"}, {"set"}),
    "intersect": ({"set"}, {"set"}),
    "+": ({"number"}, {"number"}),
    "-": ({"number"}, {"number"}),
    "*": ({"number"}, {"number"}),
    "/": ({"number"}, {"number"}),
    "%": ({"number"}, {"number"}),
}


def lint_policy(p: PolicyGraph) -> list[PolicyDiagnostic]:
    """Check a policy; the diagnostics are the result, nothing is raised."""
    diagnostics: list[PolicyDiagnostic] = []

    def _report(severity: str, code: str, element_id: str, message: str) -> None:
        diagnostics.append(
            PolicyDiagnostic(policy=p.name, severity=severity, code=code, element_id=element_id, message=message)
        )

    anchored: set[str] = set()
    for element_id in p.element_ids:
        anchored.update(anchored_variables(p.domain[element_id]))
    for variable in sorted(p.variables - anchored):
        where = next(
            (e for e in p.element_ids if _mentions(p.domain[e], variable) or _mentions(p.requirement[e], variable)),
            "",
        )
        _report(
            "error", "unanchored-variable", where,
            f"variable ${variable} has no '${variable} = <attribute or literal>' anchor "
            "in conjunctive position of a domain predicate",
        )

    for node in p.nodes:
        for n in iter_nodes(p.requirement[node]):
            if n.label == ATTRNAME:
                _report(
                    "error", "attribute-in-node-requirement", node,
                    f"node requirement refers to attribute {n.operand1!r}",
                )

    for element_id in p.element_ids:
        for position, pred in (("domain", p.domain[element_id]), ("requirement", p.requirement[element_id])):
            for message in _type_errors(pred):
                _report("error", "type-mismatch", element_id, f"{position}: {message}")
            if _mixes_logic(pred):
                _report(
                    "warning", "mixed-logic", element_id,
                    f"{position} mixes && and || without parentheses",
                )

    return diagnostics


def lint_errors(p: PolicyGraph) -> list[PolicyDiagnostic]:
    return [d for d in lint_policy(p) if d.severity == "error"]


def anchored_variables(p: PredExpr) -> set[str]:
    """Variables anchored by ``$v = x`` / ``x = $v`` in conjunctive position."""
    found: set[str] = set()
    for node in conjunctive_terms(p):
        if node.label != EQ:
            continue
        left, right = node.operand1, node.operand2
        if left.label == VARNAME and right.label in (LITERAL, ATTRNAME):
            found.add(left.operand1)
        elif right.label == VARNAME and left.label in (LITERAL, ATTRNAME):
            found.add(right.operand1)
    return found


def conjunctive_terms(p: PredExpr) -> Iterator[PredExpr]:
    """Yield the maximal sub-expressions joined by ``&&`` (parentheses are transparent)."""
    if p.label == AND:
        yield from conjunctive_terms(p.operand1)
        yield from conjunctive_terms(p.operand2)
    elif p.label == PAREN:
        yield from conjunctive_terms(p.operand1)
    else:
        yield p


def _mentions(p: PredExpr, variable: str) -> bool:
    return any(n.label == VARNAME and n.operand1 == variable for n in iter_nodes(p))


def _type_errors(p: PredExpr) -> list[str]:
    errors = []
    for node in iter_nodes(p):
        if node.label == NOT:
            inner = _literal_value(node.operand1)
            if inner is not None and value_kind(inner[0]) != "boolean":
                errors.append(f"'!' applied to {render_value(inner[0])}")
            continue
        if node.label not in BINARY_OPERATORS:
            continue
        left, right = _literal_value(node.operand1), _literal_value(node.operand2)
        if left is not None and right is not None:
            if apply_operator(node.label, left[0], right[0]) is MISMATCH:
                errors.append(
                    f"'{node.label}' cannot combine {render_value(left[0])} and {render_value(right[0])}"
                )
            continue
        kinds = _OPERAND_KINDS.get(node.label)
        if kinds is None:
            continue
        for operand, allowed in ((left, kinds[0]), (right, kinds[1])):
            if operand is not None and allowed is not None and value_kind(operand[0]) not in allowed:
                errors.append(f"'{node.label}' cannot take {render_value(operand[0])} as an operand")
    return errors


def _literal_value(p: PredExpr) -> Optional[tuple]:
    while p.label == PAREN:
        p = p.operand1
    return (p.operand1,) if p.label == LITERAL else None


def _mixes_logic(p: PredExpr) -> bool:
    for node in iter_nodes(p):
        if node.label in (AND, OR):
            other = OR if node.label == AND else AND
            if node.operand1.label == other or node.operand2.label == other:
                return True
    return False
