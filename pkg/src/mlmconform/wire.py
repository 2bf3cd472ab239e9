"""JSON forms of traces, events and verdicts exchanged with the rule server.

Attribute values carry an explicit type so that integers, decimals,
booleans and timestamps survive the trip unchanged.
"""

from __future__ import annotations

import math
from datetime import datetime

from .alignment import StepError, step_from_wire
from .engine import Verdict
from .eventlog.model import Attribute, Event, EventKind, Trace, value_type
from .timestamps import format_timestamp, parse_timestamp


class WireError(ValueError):
    pass


def attribute_to_wire(attr: Attribute) -> dict:
    value = attr.value
    if isinstance(value, datetime):
        value = format_timestamp(value)
    elif isinstance(value, float) and not math.isfinite(value):
        value = repr(value)  # JSON has no NaN/inf
    return {"key": attr.key, "type": value_type(attr.value), "value": value}


def attribute_from_wire(data) -> Attribute:
    if not isinstance(data, dict) or not {"key", "type", "value"} <= set(data):
        raise WireError("attribute needs key, type and value")
    kind, raw = data["type"], data["value"]
    try:
        if kind == "string" and isinstance(raw, str):
            value = raw
        elif kind == "boolean" and isinstance(raw, bool):
            value = raw
        elif kind == "int" and isinstance(raw, int) and not isinstance(raw, bool):
            value = raw
        elif kind == "float" and isinstance(raw, (int, float, str)) and not isinstance(raw, bool):
            value = float(raw)
        elif kind == "date" and isinstance(raw, str):
            value = parse_timestamp(raw)
        else:
            raise WireError(f"attribute {data.get('key')!r}: value does not match type {kind!r}")
        return Attribute(str(data["key"]), value)
    except (TypeError, ValueError) as exc:
        raise WireError(str(exc)) from None


def event_to_wire(event: Event) -> dict:
    out = {"activity": event.activity, "timestamp": format_timestamp(event.timestamp),
           "kind": event.kind.value,
           "attributes": [attribute_to_wire(a) for a in event.attributes]}
    if event.parent is not None:
        out["parent"] = event.parent
    return out


def event_from_wire(data) -> Event:
    if not isinstance(data, dict):
        raise WireError("event must be an object")
    try:
        activity = data["activity"]
        timestamp = parse_timestamp(str(data["timestamp"]))
        attrs = data.get("attributes", [])
        if not isinstance(activity, str) or not isinstance(attrs, list):
            raise WireError("event activity must be a string and attributes a list")
        return Event(activity, timestamp, tuple(attribute_from_wire(a) for a in attrs),
                     EventKind(data.get("kind", "OBSERVED")), data.get("parent"))
    except KeyError as exc:
        raise WireError(f"event is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise WireError(str(exc)) from None


def trace_to_wire(trace: Trace) -> dict:
    return {"case_id": trace.case_id, "events": [event_to_wire(e) for e in trace.events]}


def trace_from_wire(data) -> Trace:
    if not isinstance(data, dict) or not isinstance(data.get("events"), list):
        raise WireError("trace must be an object with an events list")
    case_id = data.get("case_id", "")
    if not isinstance(case_id, str):
        raise WireError("case_id must be a string")
    events = [event_from_wire(e) for e in data["events"]]
    try:
        return Trace(case_id, tuple(events))
    except ValueError as exc:
        raise WireError(str(exc)) from None


def verdict_to_wire(v: Verdict) -> dict:
    return {"mlm": v.mlm, "event_index": v.event_index, "conform": v.conform,
            "metadata": v.metadata, "steps": [s.to_wire() for s in v.steps], "error": v.error}


def verdict_from_wire(data) -> Verdict:
    try:
        steps = tuple(step_from_wire(s, strict=False) for s in data.get("steps", []))
        return Verdict(str(data["mlm"]), int(data["event_index"]), bool(data["conform"]),
                       dict(data.get("metadata") or {}), steps, data.get("error"))
    except (KeyError, TypeError, AttributeError, StepError) as exc:
        raise WireError(f"malformed verdict: {exc}") from None
