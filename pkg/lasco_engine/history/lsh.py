"""The LSH history format: one snapshot or event record per line.

::

    # comment
    snapshot 4 Ujoe class="user" team="team1"
    event 4 req_4 Ujoe -> P57 name="request"

Values are double-quoted strings, decimal numbers, ``true``/``false`` or
sets ``{v1, v2}``. ``id`` (snapshots) and ``time`` (events) are implicit.
"""

import logging
from decimal import Decimal
from functools import lru_cache
from typing import Union

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError
from pydantic import ValidationError

from lasco_engine.history.model import ObjectSnapshot, SystemEvent, SystemHistory
from lasco_engine.lang.predicate import render_value
from lasco_engine.settings import HistoryConsistencyError, HistoryFormatError

logger = logging.getLogger(__name__)

LSH_GRAMMAR = r"""
    ?start: snapshot | event

    snapshot: "snapshot" time IDENT attribute*
    event: "event" time IDENT IDENT "->" IDENT attribute*

    attributes: attribute*

    time: NUMBER          -> number
        | "-" NUMBER      -> negative

    attribute: KEY "=" value

    ?value: scalar
          | "{" [scalar ("," scalar)*] "}"   -> set_value

    ?scalar: STRING       -> string
           | NUMBER       -> number
           | "-" NUMBER   -> negative
           | BOOL         -> boolean

    BOOL.2: /(?i:true|false)(?![A-Za-z0-9_])/
    KEY: /[A-Za-z0-9_]+/
    IDENT: /[A-Za-z0-9_.:@\/]+(-(?!>)[A-Za-z0-9_.:@\/]*)*/
    NUMBER: /[0-9]+(\.[0-9]+)?/
    STRING: /"[^"\n]*"/

    %import common.WS_INLINE
    %ignore WS_INLINE
"""


def _number(text: str):
    return Decimal(text) if "." in text else int(text)


class _RecordBuilder(Transformer):

    @v_args(inline=True)
    def string(self, token: Token):
        return str(token)[1:-1]

    @v_args(inline=True)
    def number(self, token: Token):
        return _number(str(token))

    @v_args(inline=True)
    def negative(self, token: Token):
        return -_number(str(token))

    @v_args(inline=True)
    def boolean(self, token: Token):
        return str(token).lower() == "true"

    def set_value(self, items):
        return frozenset(item for item in items if item is not None)

    @v_args(inline=True)
    def attribute(self, key: Token, value):
        return (str(key), value)

    def snapshot(self, items):
        time, object_id, *attributes = items
        return ObjectSnapshot(object_id=str(object_id), time=time, attrs=_attr_map(attributes))

    def event(self, items):
        time, event_id, src, dst, *attributes = items
        return SystemEvent(
            event_id=str(event_id), src=str(src), dst=str(dst), time=time, attrs=_attr_map(attributes),
        )

    def attributes(self, items):
        return _attr_map(items)


def _attr_map(attributes: list[tuple[str, object]]) -> dict:
    attrs: dict = {}
    for key, value in attributes:
        if key in attrs:
            raise ValueError(f"attribute {key!r} given twice")
        attrs[key] = value
    return attrs


@lru_cache(maxsize=1)
def _parser() -> Lark:
    return Lark(LSH_GRAMMAR, parser="lalr", start=["start", "attributes"])


def parse_record(line: str, line_number: int = 0) -> Union[ObjectSnapshot, SystemEvent]:
    """Parse one LSH record line.

    Raises:
        HistoryFormatError: On syntax errors or an explicit ``id``/``time``
            attribute that contradicts the record.
    """
    try:
        return _RecordBuilder().transform(_parser().parse(line, start="start"))
    except UnexpectedInput as exc:
        raise HistoryFormatError(f"cannot parse record at column {exc.column}: {line.strip()!r}", line_number) from None
    except VisitError as exc:
        cause = exc.orig_exc
        if isinstance(cause, ValidationError):
            detail = "; ".join(err["msg"] for err in cause.errors())
        else:
            detail = str(cause)
        raise HistoryFormatError(detail, line_number) from None


def parse_attributes(text: str) -> dict:
    """Parse ``key=value`` pairs written as in an LSH record.

    Raises:
        HistoryFormatError: On syntax errors or a repeated key.
    """
    try:
        return _RecordBuilder().transform(_parser().parse(text, start="attributes"))
    except UnexpectedInput as exc:
        raise HistoryFormatError(f"cannot parse attributes at column {exc.column}: {text.strip()!r}") from None
    except VisitError as exc:
        raise HistoryFormatError(str(exc.orig_exc)) from None


def iter_records(text: str):
    """Yield ``(line_number, record)`` for every non-blank, non-comment line."""
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield number, parse_record(stripped, number)


def parse_history(text: str) -> SystemHistory:
    """Parse LSH text into a validated :class:`SystemHistory`.

    Raises:
        HistoryFormatError: On a malformed line.
        HistoryConsistencyError: On a duplicate event id or an event whose
            endpoint has no snapshot at or before the event's time.
    """
    history = SystemHistory()
    events: list[tuple[int, SystemEvent]] = []
    for number, record in iter_records(text):
        if isinstance(record, ObjectSnapshot):
            history.add_snapshot(record)
        else:
            events.append((number, record))
    for number, event in events:
        try:
            history.add_event(event)
        except HistoryConsistencyError as exc:
            raise HistoryConsistencyError(f"line {number}: {exc}") from None
    history.validate()
    logger.debug("Parsed history with %d instances", len(history))
    return history


def render_record(record: Union[ObjectSnapshot, SystemEvent]) -> str:
    if isinstance(record, ObjectSnapshot):
        attrs = {k: v for k, v in record.attrs.items() if k != "id"}
        head = f"snapshot {render_value(record.time)} {record.object_id}"
    else:
        attrs = {k: v for k, v in record.attrs.items() if k != "time"}
        head = f"event {render_value(record.time)} {record.event_id} {record.src} -> {record.dst}"
    fields = [f"{key}={_render_lsh_value(value)}" for key, value in sorted(attrs.items())]
    return " ".join([head, *fields])


def _render_lsh_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return render_value(value)


def render_history(h: SystemHistory) -> str:
    """Snapshots before events within an instant, each sorted by id."""
    lines: list[str] = []
    for instance in h.instances():
        lines.extend(render_record(s) for s in sorted(instance.snapshots, key=lambda s: s.object_id))
        lines.extend(render_record(e) for e in sorted(instance.events, key=lambda e: e.event_id))
    return "\n".join(lines) + ("\n" if lines else "")
