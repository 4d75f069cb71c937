"""Predicate expressions: abstract syntax, text grammar, parsing and rendering.

A predicate is a tree of :class:`PredExpr` nodes. Leaves are literals,
attribute names and ``$variables``; inner nodes are parentheses, negation
and the binary operators. Operator precedence, loosest to tightest::

    && ||  |  = !=  |  < > <= >=  |  union intersect  |  pcont cont  |  in  |  + -  |  * / %  |  !

Binary operators associate to the left, ``!`` to the right. Unicode
spellings (``∈ ⊂ ⊆ ∩ ∪ ≠ ≤ ≥ ¬ ∧ ∨``) are accepted on input and never
emitted by :func:`render_predicate`.
"""

import logging
from decimal import Decimal
from functools import lru_cache
from typing import Any, NamedTuple, Optional

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from lasco_engine.settings import PredicateSyntaxError

logger = logging.getLogger(__name__)

# ── Labels ─────────────────────────────────────────────────────────

LITERAL = "literal"
ATTRNAME = "attrname"
VARNAME = "varname"
PAREN = "paren"
NOT = "not"

AND = "&&"
OR = "||"
EQ = "="
NE = "!="
LT = "<"
GT = ">"
LE = "<="
GE = ">="
IN = "in"
PCONT = "pcont"
CONT = "cont"
UNION = "union"
INTERSECT = "intersect"
ADD = "+"
SUB = "-"
MUL = "*"
DIV = "/"
MOD = "%"

# Precedence level per binary operator; larger binds tighter.
PRECEDENCE: dict[str, int] = {
    AND: 1, OR: 1,
    EQ: 2, NE: 2,
    LT: 3, GT: 3, LE: 3, GE: 3,
    UNION: 4, INTERSECT: 4,
    PCONT: 5, CONT: 5,
    IN: 6,
    ADD: 7, SUB: 7,
    MUL: 8, DIV: 8, MOD: 8,
}
BINARY_OPERATORS = frozenset(PRECEDENCE)
_UNARY_LEVEL = 9
_ATOM_LEVEL = 10


class PredExpr(NamedTuple):
    """One node of a predicate tree.

    ``operand1`` holds the literal value, the attribute/variable name, or the
    first sub-expression; ``operand2`` is only set for binary operators.
    """

    label: str
    operand1: Any
    operand2: Optional["PredExpr"] = None

    def __repr__(self) -> str:
        try:
            return f"PredExpr<{render_predicate(self)}>"
        except (TypeError, ValueError, KeyError):
            return f"PredExpr({self.label!r}, {self.operand1!r}, {self.operand2!r})"


# ── Constructors ───────────────────────────────────────────────────

def literal(value: Any) -> PredExpr:
    return PredExpr(LITERAL, value)


def attr(name: str) -> PredExpr:
    return PredExpr(ATTRNAME, name)


def var(name: str) -> PredExpr:
    return PredExpr(VARNAME, name)


def paren(inner: PredExpr) -> PredExpr:
    return PredExpr(PAREN, inner)


def negate(inner: PredExpr) -> PredExpr:
    return PredExpr(NOT, inner)


def binary(op: str, left: PredExpr, right: PredExpr) -> PredExpr:
    if op not in BINARY_OPERATORS:
        raise ValueError(f"unknown binary operator {op!r}")
    return PredExpr(op, left, right)


TRUE = literal(True)
FALSE = literal(False)


def is_true(p: PredExpr) -> bool:
    return p.label == LITERAL and p.operand1 is True


def is_false(p: PredExpr) -> bool:
    return p.label == LITERAL and p.operand1 is False


def conjoin(left: PredExpr, right: PredExpr) -> PredExpr:
    """``left && right``, dropping literal-true operands."""
    if is_true(left):
        return right
    if is_true(right):
        return left
    return binary(AND, left, right)


# ── Tree queries ───────────────────────────────────────────────────

def iter_nodes(p: PredExpr):
    """Yield every node of the tree in preorder."""
    stack = [p]
    while stack:
        node = stack.pop()
        yield node
        if node.label in BINARY_OPERATORS:
            stack.append(node.operand2)
            stack.append(node.operand1)
        elif node.label in (PAREN, NOT):
            stack.append(node.operand1)


def predicate_attrs(p: PredExpr) -> frozenset[str]:
    return frozenset(n.operand1 for n in iter_nodes(p) if n.label == ATTRNAME)


def predicate_vars(p: PredExpr) -> frozenset[str]:
    return frozenset(n.operand1 for n in iter_nodes(p) if n.label == VARNAME)


def strip_parens(p: PredExpr) -> PredExpr:
    """Remove every ``paren`` node; used to compare trees modulo grouping."""
    if p.label == PAREN:
        return strip_parens(p.operand1)
    if p.label == NOT:
        return negate(strip_parens(p.operand1))
    if p.label in BINARY_OPERATORS:
        return binary(p.label, strip_parens(p.operand1), strip_parens(p.operand2))
    return p


def structurally_equal(p: PredExpr, q: PredExpr) -> bool:
    """Tree equality that ignores explicit grouping and distinguishes booleans from numbers."""
    return _freeze(strip_parens(p)) == _freeze(strip_parens(q))


def _freeze(p: PredExpr):
    if p.label == LITERAL:
        return (LITERAL, _value_token(p.operand1))
    if p.label in (ATTRNAME, VARNAME):
        return (p.label, p.operand1)
    if p.label == NOT:
        return (NOT, _freeze(p.operand1))
    return (p.label, _freeze(p.operand1), _freeze(p.operand2))


def _value_token(value: Any):
    if isinstance(value, bool):
        return ("boolean", value)
    if isinstance(value, (int, Decimal)):
        return ("number", value)
    if isinstance(value, frozenset):
        return ("set", frozenset(_value_token(v) for v in value))
    return ("string", value)


# ── Grammar ────────────────────────────────────────────────────────

PREDICATE_GRAMMAR = r"""
    ?start: logic

    ?logic: equality
          | logic "&&" equality           -> and_
          | logic "∧" equality            -> and_
          | logic "||" equality           -> or_
          | logic "∨" equality            -> or_

    ?equality: relation
             | equality "=" relation      -> eq
             | equality "!=" relation     -> ne
             | equality "≠" relation      -> ne

    ?relation: setexpr
             | relation "<" setexpr       -> lt
             | relation ">" setexpr       -> gt
             | relation "<=" setexpr      -> le
             | relation "≤" setexpr       -> le
             | relation ">=" setexpr      -> ge
             | relation "≥" setexpr       -> ge

    ?setexpr: containment
            | setexpr "union" containment      -> union
            | setexpr "∪" containment          -> union
            | setexpr "intersect" containment  -> intersect
            | setexpr "∩" containment          -> intersect

    ?containment: membership
                | containment "pcont" membership  -> pcont
                | containment "⊂" membership      -> pcont
                | containment "cont" membership   -> cont
                | containment "⊆" membership      -> cont

    ?membership: sum
               | membership "in" sum     -> in_
               | membership "∈" sum      -> in_

    ?sum: product
        | sum "+" product                -> add
        | sum "-" product                -> sub

    ?product: unary
            | product "*" unary          -> mul
            | product "/" unary          -> div
            | product "%" unary          -> mod

    ?unary: atom
          | "!" unary                    -> not_
          | "¬" unary                    -> not_

    ?atom: scalar
         | set_literal
         | ATTR                          -> attrname
         | VAR                           -> varname
         | "(" logic ")"                 -> paren

    set_literal: "{" [scalar ("," scalar)*] "}"

    ?scalar: STRING                      -> string
           | NUMBER                      -> number
           | "-" NUMBER                  -> negative
           | BOOL                        -> boolean

    BOOL.2: /(?i:true|false)(?![A-Za-z0-9_])/
    ATTR: /[A-Za-z_][A-Za-z0-9_]*/
    VAR: /\$[A-Za-z0-9_]+/
    NUMBER: /[0-9]+(\.[0-9]+)?/
    STRING: /"[^"\n]*"/

    %import common.WS
    %ignore WS
"""


def _number(text: str):
    return Decimal(text) if "." in text else int(text)


class _PredicateBuilder(Transformer):
    """Turn the lark parse tree into :class:`PredExpr` nodes."""

    @v_args(inline=True)
    def string(self, token: Token) -> PredExpr:
        return literal(str(token)[1:-1])

    @v_args(inline=True)
    def number(self, token: Token) -> PredExpr:
        return literal(_number(str(token)))

    @v_args(inline=True)
    def negative(self, token: Token) -> PredExpr:
        return literal(-_number(str(token)))

    @v_args(inline=True)
    def boolean(self, token: Token) -> PredExpr:
        return literal(str(token).lower() == "true")

    def set_literal(self, items) -> PredExpr:
        return literal(frozenset(item.operand1 for item in items if item is not None))

    @v_args(inline=True)
    def attrname(self, token: Token) -> PredExpr:
        return attr(str(token))

    @v_args(inline=True)
    def varname(self, token: Token) -> PredExpr:
        return var(str(token)[1:])

    @v_args(inline=True)
    def paren(self, inner: PredExpr) -> PredExpr:
        return paren(inner)

    @v_args(inline=True)
    def not_(self, inner: PredExpr) -> PredExpr:
        return negate(inner)


def _binary_rule(op: str):
    return v_args(inline=True)(lambda self, left, right: binary(op, left, right))


for _rule, _op in {
    "and_": AND, "or_": OR, "eq": EQ, "ne": NE, "lt": LT, "gt": GT, "le": LE, "ge": GE,
    "union": UNION, "intersect": INTERSECT, "pcont": PCONT, "cont": CONT, "in_": IN,
    "add": ADD, "sub": SUB, "mul": MUL, "div": DIV, "mod": MOD,
}.items():
    setattr(_PredicateBuilder, _rule, _binary_rule(_op))


@lru_cache(maxsize=1)
def _parser() -> Lark:
    return Lark(PREDICATE_GRAMMAR, parser="lalr", transformer=_PredicateBuilder())


# ── Parsing ────────────────────────────────────────────────────────

def parse_predicate(text: str) -> PredExpr:
    """Parse predicate text into a :class:`PredExpr` tree.

    Raises:
        PredicateSyntaxError: On any lexical or grammatical error, with the
            line and column of the offending input.
    """
    try:
        return _parser().parse(text)
    except UnexpectedInput as exc:
        raise _syntax_error(text, exc) from None


def _syntax_error(text: str, exc: UnexpectedInput) -> PredicateSyntaxError:
    line = getattr(exc, "line", 1) or 1
    column = getattr(exc, "column", 1) or 1
    if isinstance(exc, UnexpectedCharacters):
        char = text[exc.pos_in_stream] if exc.pos_in_stream < len(text) else ""
        if char == '"':
            message = "unterminated string"
        else:
            message = f"unknown operator or token {char!r}"
    elif isinstance(exc, UnexpectedEOF):
        message = "unexpected end of predicate"
    elif isinstance(exc, UnexpectedToken):
        if exc.token.type == "$END":
            message = "unexpected end of predicate"
        else:
            message = f"unexpected {exc.token.value!r}"
    else:
        message = "syntax error"
    return PredicateSyntaxError(message, text=text, line=line, column=column)


# ── Rendering ──────────────────────────────────────────────────────

def render_value(value: Any) -> str:
    """Literal text for an attribute value, in the predicate grammar's syntax."""
    if isinstance(value, bool):
        return "True" if value else "False"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Decimal):
        return format(value, "f")
    if isinstance(value, frozenset):
        return "{" + ", ".join(sorted(render_value(v) for v in value)) + "}"
    if isinstance(value, str):
        if '"' in value or "\n" in value:
            raise ValueError(f"string value cannot be rendered: {value!r}")
        return f'"{value}"'
    raise TypeError(f"not an attribute value: {value!r}")


def render_predicate(p: PredExpr) -> str:
    """Render a tree as predicate text, adding only the parentheses precedence requires."""
    label = p.label
    if label == LITERAL:
        return render_value(p.operand1)
    if label == ATTRNAME:
        return p.operand1
    if label == VARNAME:
        return f"${p.operand1}"
    if label == PAREN:
        return f"({render_predicate(p.operand1)})"
    if label == NOT:
        inner = p.operand1
        text = render_predicate(inner)
        if _level(inner) < _UNARY_LEVEL:
            text = f"({text})"
        return f"!{text}"

    level = PRECEDENCE[label]
    left = render_predicate(p.operand1)
    right = render_predicate(p.operand2)
    if _level(p.operand1) < level:
        left = f"({left})"
    if _level(p.operand2) <= level:
        right = f"({right})"
    return f"{left} {label} {right}"


def _level(p: PredExpr) -> int:
    if p.label in BINARY_OPERATORS:
        return PRECEDENCE[p.label]
    if p.label == NOT:
        return _UNARY_LEVEL
    return _ATOM_LEVEL
