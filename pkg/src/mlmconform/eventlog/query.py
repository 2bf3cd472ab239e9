"""Read-only query language over a single trace.

Grammar::

    query := (first|last|count|all)? (events|attribute <key>|timestamps)
             (where activity = "<name>")? (where <key> <cmp> <literal>)*
    cmp   := = | != | < | <= | > | >=

Queries range over the primary events of a trace (observed and aligned
inserts); attribute-write events exist for evocation only. Activity names
are compared after :func:`normalize_name`, so ``"Excision"`` and
``"excision"`` select the same events.
"""

from __future__ import annotations

import json
import operator
from dataclasses import dataclass
from datetime import datetime
from decimal import Decimal

from ..lexer import ParseError, TokenStream
from .model import Event, EventLogError, Trace, format_timestamp, normalize_name

SELECTORS = ("first", "last", "count", "all")
TARGETS = ("events", "attribute", "timestamps")
COMPARATORS = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class Filter:
    key: str
    cmp: str
    literal: object


@dataclass(frozen=True)
class TraceQuery:
    target: str
    selector: str = "all"
    key: str | None = None
    filters: tuple[Filter, ...] = ()

    def __str__(self) -> str:
        parts = [] if self.selector == "all" else [self.selector]
        parts.append(f"attribute {self.key}" if self.target == "attribute" else self.target)
        for f in self.filters:
            parts.append(f"where {f.key} {f.cmp} {format_literal(f.literal)}")
        return " ".join(parts)


def format_literal(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, datetime):
        return format_timestamp(value).replace("+00:00", "Z")
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, float):
        # positional notation: the lexer has no exponent form
        text = format(Decimal(repr(value)), "f")
        return text if "." in text else text + ".0"
    return repr(value)


def _literal(ts: TokenStream):
    tok = ts.current
    if tok.kind in ("STRING", "NUMBER", "TIMESTAMP"):
        ts.advance()
        return tok.value
    if tok.is_word("true", "false"):
        ts.advance()
        return tok.text == "true"
    if tok.is_op("-") and ts.peek().kind == "NUMBER":
        ts.advance()
        return -ts.advance().value
    raise ts.error("a literal")


def parse_query_tokens(ts: TokenStream) -> TraceQuery:
    """Parse a query from ``ts``; stops at the first token that cannot continue it."""
    selector = "all"
    if ts.current.is_word(*SELECTORS):
        selector = ts.advance().text
    tok = ts.current
    if tok.kind != "IDENT":
        raise ts.error("events, attribute <key> or timestamps")
    if tok.text not in TARGETS:
        raise ParseError("UNKNOWN_FIELD", f"unknown query field {tok.text!r}", tok.offset, ts.source)
    target = ts.advance().text
    key = None
    if target == "attribute":
        if ts.current.kind != "IDENT":
            raise ts.error("an attribute key")
        key = ts.advance().text
    filters = []
    while ts.accept_word("where"):
        if ts.current.kind != "IDENT":
            raise ts.error("an attribute key or 'activity'")
        fkey = ts.advance().text
        cmp_tok = ts.current
        if cmp_tok.kind != "OP" or cmp_tok.text not in COMPARATORS:
            raise ts.error("a comparison operator")
        ts.advance()
        filters.append(Filter(fkey, cmp_tok.text, _literal(ts)))
    return TraceQuery(target, selector, key, tuple(filters))


def parse_query(text: str) -> TraceQuery:
    try:
        ts = TokenStream(text)
        query = parse_query_tokens(ts)
        ts.expect_end()
    except ParseError as exc:
        code = exc.code if exc.code == "UNKNOWN_FIELD" else "QUERY_SYNTAX"
        raise EventLogError(code, f"{exc.message} (column {exc.column})") from exc
    return query


def _comparable(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool)
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return True
    return type(a) is type(b) or (isinstance(a, datetime) and isinstance(b, datetime))


def _matches(event: Event, flt: Filter) -> bool:
    if flt.key == "activity":
        if not isinstance(flt.literal, str):
            return False
        actual, wanted = normalize_name(event.activity), normalize_name(flt.literal)
    else:
        actual = event.get(flt.key)
        wanted = flt.literal
        if actual is None or not _comparable(actual, wanted):
            return False
        if isinstance(actual, bool) and flt.cmp not in ("=", "!="):
            return False
    return COMPARATORS[flt.cmp](actual, wanted)


def query_trace(trace: Trace, q: TraceQuery | str) -> list:
    """Evaluate ``q`` against ``trace``; results follow trace order."""
    if isinstance(q, str):
        q = parse_query(q)
    if q.target not in TARGETS:
        raise EventLogError("UNKNOWN_FIELD", f"unknown query field {q.target!r}")
    selected = [e for e in trace.primary_events() if all(_matches(e, f) for f in q.filters)]
    if q.target == "events":
        values: list = selected
    elif q.target == "timestamps":
        values = [e.timestamp for e in selected]
    else:
        values = [v for v in (e.get(q.key) for e in selected) if v is not None]
    if q.selector == "count":
        return [len(values)]
    if q.selector == "first":
        return values[:1]
    if q.selector == "last":
        return values[-1:]
    return values


def binding_value(q: TraceQuery, results: list):
    """Collapse a query result to the value a rule variable holds."""
    if q.selector == "count":
        return results[0]
    if q.selector in ("first", "last"):
        return results[0] if results else None
    return results


def binding_type(q: TraceQuery) -> str:
    element = {"events": "event", "timestamps": "timestamp", "attribute": "any"}[q.target]
    if q.selector == "count":
        return "integer"
    if q.selector in ("first", "last"):
        return element
    return f"list[{element}]"
