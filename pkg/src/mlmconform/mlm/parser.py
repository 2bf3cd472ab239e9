"""Slot-structured rule files.

File layout (EBNF)::

    file      = category+ [ "end:" ] ;
    category  = ("maintenance:" | "library:" | "knowledge:") slot* ;
    slot      = name ":" body ";;" ;

Knowledge slots are ``data`` (``name := query;`` statements), ``evoke``
(event names separated by ``or``, ``,`` or ``;``), ``logic`` (one boolean
expression) and ``action`` (YAML with optional ``conform`` mapping and
``violation`` step list). Lines starting with ``//`` between slots are
comments.
"""

from __future__ import annotations

import re
import textwrap
from datetime import date, datetime

import yaml

from ..alignment import (
    Op,
    Relation,
    StepError,
    StepTemplate,
    Strategy,
    Subject,
    coerce_enum,
    check_combination,
)
from ..eventlog.model import normalize_key, normalize_name
from ..eventlog.query import binding_type, parse_query_tokens
from ..lexer import ParseError, TokenStream, line_col
from ..timestamps import to_utc
from .ast import Expr, Literal, format_expr
from .errors import MlmError
from .exprparser import KEYWORDS, parse_expr
from .model import (
    LIBRARY_OPTIONAL,
    LIBRARY_REQUIRED,
    MAINTENANCE_REQUIRED,
    ActionSpec,
    Binding,
    Mlm,
)
from .typecheck import typecheck

CATEGORIES = ("maintenance", "library", "knowledge")
KNOWLEDGE_SLOTS = ("data", "evoke", "logic", "action")
STEP_KEYS = {"subject", "op", "value", "relation", "anchors", "strategy", "attribute_key", "activity"}

_HEAD = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)[ \t]*:(?!=)")
_SKIP = re.compile(r"(?:\s+|//[^\n]*)*")
_BINDING_NAME = re.compile(r"^[a-z][a-z0-9_]*$")
_MLMNAME = re.compile(r"^[A-Za-z0-9_.\-]+$")


class _Slot:
    def __init__(self, name: str, body: str, start: int, head: int):
        self.name = name
        self.body = body
        self.start = start  # offset of the body in the file
        self.head = head  # offset of the slot name


def _scan(text: str) -> tuple[dict[str, dict[str, _Slot]], dict[str, int]]:
    cats: dict[str, dict[str, _Slot]] = {}
    heads: dict[str, int] = {}
    current = None
    pos = 0
    n = len(text)
    while True:
        pos = _SKIP.match(text, pos).end()
        if pos >= n:
            break
        m = _HEAD.match(text, pos)
        if not m:
            raise MlmError("SYNTAX_ERROR", "expected a category or slot name followed by ':'",
                           offset=pos)
        name = m.group(1).lower()
        if name == "end":
            rest = _SKIP.match(text, m.end()).end()
            if rest < n:
                raise MlmError("SYNTAX_ERROR", "text after 'end:'", offset=rest)
            break
        if name in CATEGORIES:
            if name in cats:
                raise MlmError("SYNTAX_ERROR", f"category '{name}' appears twice", offset=pos)
            if CATEGORIES.index(name) < (CATEGORIES.index(current) if current else -1):
                raise MlmError("SYNTAX_ERROR", f"category '{name}' out of order", offset=pos)
            cats[name] = {}
            heads[name] = pos
            current = name
            pos = m.end()
            continue
        if current is None:
            raise MlmError("SYNTAX_ERROR", f"slot '{name}' before any category", offset=pos)
        end = text.find(";;", m.end())
        if end < 0:
            raise MlmError("SYNTAX_ERROR", f"slot '{name}' is not terminated by ';;'",
                           offset=pos, slot=name)
        if name in cats[current]:
            raise MlmError("SYNTAX_ERROR", f"slot '{name}' appears twice", offset=pos, slot=name)
        if current == "knowledge" and name not in KNOWLEDGE_SLOTS:
            raise MlmError("SYNTAX_ERROR", f"unknown knowledge slot '{name}'", offset=pos, slot=name)
        cats[current][name] = _Slot(name, text[m.end():end], m.end(), pos)
        pos = end + 2
    return cats, heads


def _text(slot: _Slot) -> str:
    return " ".join(slot.body.split())


def _meta(cats, category: str, required, optional=()) -> dict:
    slots = cats[category]
    out = {}
    for name in required:
        if name not in slots:
            raise MlmError("MISSING_SLOT", f"required slot '{name}' is missing", slot=name)
        out[name] = _text(slots[name])
    for name in optional:
        out[name] = _text(slots[name]) if name in slots else ""
    for name, slot in slots.items():
        if name not in out:
            out[name] = _text(slot)
    return out


def _parse_data(slot: _Slot) -> tuple[Binding, ...]:
    ts = TokenStream(slot.body)
    bindings: list[Binding] = []
    seen = set()
    while True:
        while ts.accept_op(";"):
            pass
        if ts.current.kind == "EOF":
            break
        tok = ts.current
        if tok.kind != "IDENT":
            raise ts.error("a variable name")
        if not _BINDING_NAME.match(tok.text) or tok.text in KEYWORDS:
            raise ParseError("SYNTAX_ERROR", f"invalid variable name {tok.text!r}", tok.offset, ts.source)
        if tok.text in seen:
            raise ParseError("SYNTAX_ERROR", f"variable {tok.text!r} declared twice", tok.offset, ts.source)
        ts.advance()
        ts.expect_op(":=")
        query = parse_query_tokens(ts)
        bindings.append(Binding(tok.text, query))
        seen.add(tok.text)
        if ts.current.kind != "EOF":
            ts.expect_op(";")
    return tuple(bindings)


def _parse_evoke(slot: _Slot) -> tuple[str, ...]:
    names = []
    for raw in re.split(r"[;,\s]+", slot.body):
        raw = raw.strip().strip('"')
        if not raw or raw.lower() == "or":
            continue
        name = normalize_name(raw)
        if name not in names:
            names.append(name)
    if not names:
        raise MlmError("SYNTAX_ERROR", "evoke slot lists no events", offset=0)
    return tuple(names)


def _anchor_expr(raw, env, where: str) -> tuple[Expr, str]:
    if isinstance(raw, (datetime, date)):
        expr: Expr = Literal(to_utc(raw))
    elif isinstance(raw, str):
        try:
            expr = parse_expr(raw)
        except ParseError as exc:
            raise MlmError("SYNTAX_ERROR", f"{where}: anchor {raw!r}: {exc.message}", offset=0) from None
    else:
        raise MlmError("SYNTAX_ERROR", f"{where}: anchor must be an expression string or timestamp",
                       offset=0)
    t = typecheck(expr, env)
    if t not in ("timestamp", "any"):
        raise MlmError("TYPE_ERROR", f"{where}: anchor {format_expr(expr)!r} is {t}, not a timestamp",
                       offset=0)
    return expr, format_expr(expr)


def _scalar(value, where: str):
    if isinstance(value, datetime) or isinstance(value, date):
        return to_utc(value)
    if isinstance(value, (str, int, float, bool)):
        return value
    raise MlmError("SYNTAX_ERROR", f"{where}: value must be a scalar", offset=0)


def _parse_step(raw, env, index: int, strict: bool) -> StepTemplate:
    where = f"violation step {index + 1}"
    if not isinstance(raw, dict):
        raise MlmError("SYNTAX_ERROR", f"{where} must be a mapping", offset=0)
    unknown = set(map(str, raw)) - STEP_KEYS
    if unknown:
        raise MlmError("SYNTAX_ERROR", f"{where}: unknown keys {sorted(unknown)}", offset=0)
    for key in ("subject", "op", "value", "relation", "anchors"):
        if key not in raw:
            raise MlmError("SYNTAX_ERROR", f"{where}: missing key '{key}'", offset=0)
    try:
        subject = coerce_enum(Subject, raw["subject"], "subject")
        op = coerce_enum(Op, raw["op"], "op")
        relation = coerce_enum(Relation, raw["relation"], "relation")
        strategy = coerce_enum(Strategy, raw.get("strategy") or "EARLIEST", "strategy")
        if strict:
            check_combination(subject, op, relation)
    except StepError as exc:
        raise MlmError("SYNTAX_ERROR", f"{where}: {exc.message}", offset=0) from None
    anchors = raw["anchors"]
    if not isinstance(anchors, list):
        anchors = [anchors]
    expected = 2 if relation is Relation.BETWEEN else 1
    if len(anchors) != expected:
        raise MlmError("SYNTAX_ERROR", f"{where}: {relation.value} takes {expected} anchor(s)", offset=0)
    parsed = [_anchor_expr(a, env, where) for a in anchors]
    key = raw.get("attribute_key")
    if (subject is Subject.ATTRIBUTE) != (key is not None):
        raise MlmError("SYNTAX_ERROR", f"{where}: attribute_key is required exactly for ATTRIBUTE steps",
                       offset=0)
    if key is not None:
        key = normalize_key(str(key))
        if not key:
            raise MlmError("SYNTAX_ERROR", f"{where}: empty attribute_key", offset=0)
    activity = raw.get("activity")
    value = _scalar(raw["value"], where)
    if subject is Subject.EVENT and not (isinstance(value, str) and value.strip()):
        raise MlmError("SYNTAX_ERROR", f"{where}: event steps need an activity name as value", offset=0)
    return StepTemplate(subject, op, value, relation, tuple(e for e, _ in parsed), strategy, key,
                        None if activity is None else str(activity),
                        anchor_sources=tuple(s for _, s in parsed))


MAX_ACTION_NESTING = 64


def _flow_depth(text: str) -> int:
    """Deepest [ / { nesting outside quoted scalars."""
    depth = best = 0
    quote = None
    for ch in text:
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch in "[{":
            depth += 1
            best = max(best, depth)
        elif ch in "]}":
            depth = max(0, depth - 1)
    return best


def _parse_action(slot: _Slot, env, strict: bool) -> ActionSpec:
    body = textwrap.dedent(slot.body.strip("\n"))
    if not body.strip():
        return ActionSpec()
    if _flow_depth(body) > MAX_ACTION_NESTING:
        # PyYAML recurses per level and unwinds slowly from deep input
        raise MlmError("SYNTAX_ERROR", "action nested too deeply", offset=0)
    try:
        doc = yaml.safe_load(body)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        lead = len(slot.body) - len(slot.body.lstrip("\n"))
        offset = lead + _offset_of_line(slot.body.strip("\n"), mark.line) if mark else 0
        raise MlmError("SYNTAX_ERROR", f"action is not valid YAML: {getattr(exc, 'problem', exc)}",
                       offset=offset) from None
    except RecursionError:
        raise MlmError("SYNTAX_ERROR", "action nested too deeply", offset=0) from None
    if doc is None:
        return ActionSpec()
    if not isinstance(doc, dict) or set(map(str, doc)) - {"conform", "violation"}:
        raise MlmError("SYNTAX_ERROR", "action must be a mapping with 'conform' and/or 'violation'",
                       offset=0)
    conform = doc.get("conform") or {}
    if not isinstance(conform, dict):
        raise MlmError("SYNTAX_ERROR", "action 'conform' must be a mapping", offset=0)
    conform = {str(k): _plain(v) for k, v in conform.items()}
    steps = doc.get("violation") or []
    if not isinstance(steps, list):
        raise MlmError("SYNTAX_ERROR", "action 'violation' must be a list of steps", offset=0)
    return ActionSpec(conform, tuple(_parse_step(s, env, i, strict) for i, s in enumerate(steps)))


def _plain(value):
    if isinstance(value, (datetime, date)):
        return to_utc(value).isoformat()
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def _offset_of_line(text: str, line: int) -> int:
    pos = 0
    for _ in range(line):
        nl = text.find("\n", pos)
        if nl < 0:
            return pos
        pos = nl + 1
    return pos


def _place(exc: MlmError, text: str, slot: _Slot | None) -> MlmError:
    base = slot.start if slot is not None else 0
    offset = base + (exc.offset or 0) if exc.offset is not None else (slot.head if slot else 0)
    line, col = line_col(text, offset)
    return exc.placed(line, col, slot.name if slot else None)


def parse_mlm(text: str, strict: bool = True) -> Mlm:
    """Parse one rule file.

    With ``strict=False`` alignment steps with an undefined (subject, op)
    pair are kept so that :func:`validate_model` can report them.
    """
    try:
        cats, heads = _scan(text)
    except MlmError as exc:
        raise _place(exc, text, None) from None
    for cat in CATEGORIES:
        if cat not in cats:
            raise MlmError("MISSING_SLOT", f"category '{cat}' is missing", slot=cat, line=1, column=1)
    for cat, required, optional in (("maintenance", MAINTENANCE_REQUIRED, ()),
                                    ("library", LIBRARY_REQUIRED, LIBRARY_OPTIONAL)):
        try:
            _meta(cats, cat, required, optional)
        except MlmError as exc:
            line, col = line_col(text, heads[cat])
            raise exc.placed(line, col) from None
    maintenance = _meta(cats, "maintenance", MAINTENANCE_REQUIRED)
    library = _meta(cats, "library", LIBRARY_REQUIRED, LIBRARY_OPTIONAL)
    if not _MLMNAME.match(maintenance["mlmname"]):
        slot = cats["maintenance"]["mlmname"]
        raise _place(MlmError("SYNTAX_ERROR", f"invalid mlmname {maintenance['mlmname']!r}", offset=0),
                     text, slot)

    knowledge = cats["knowledge"]
    for name in ("evoke", "logic", "action"):
        if name not in knowledge:
            line, col = line_col(text, heads["knowledge"])
            raise MlmError("MISSING_SLOT", f"required slot '{name}' is missing", slot=name,
                           line=line, column=col)

    slot = knowledge.get("data")
    try:
        data = _parse_data(slot) if slot else ()
        env = {b.name: binding_type(b.query) for b in data}
        slot = knowledge["evoke"]
        evoke = _parse_evoke(slot)
        slot = knowledge["logic"]
        if not slot.body.strip():
            raise MlmError("SYNTAX_ERROR", "logic slot is empty", offset=0)
        logic = parse_expr(slot.body)
        t = typecheck(logic, env)
        if t not in ("boolean", "any"):
            raise MlmError("TYPE_ERROR", f"logic must be boolean, got {t}", offset=0, node="<root>")
        slot = knowledge["action"]
        action = _parse_action(slot, env, strict)
    except ParseError as exc:
        raise _place(MlmError(exc.code if exc.code != "UNKNOWN_FIELD" else "SYNTAX_ERROR",
                              exc.message, offset=exc.offset), text, slot) from None
    except MlmError as exc:
        raise _place(exc, text, slot) from None
    return Mlm(maintenance, library, data, evoke, logic, action)
