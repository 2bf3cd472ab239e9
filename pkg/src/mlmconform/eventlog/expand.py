from __future__ import annotations

from .model import Attribute, Event, EventKind, Trace, format_value, normalize_name


def write_event_name(attr: Attribute) -> str:
    """``write_<key>_<value>``, e.g. ``write_icd_code_c43.9``."""
    return f"write_{attr.key}_{normalize_name(format_value(attr.value))}"


def write_events(event: Event) -> list[Event]:
    return [
        Event(write_event_name(attr), event.timestamp, (attr,),
              EventKind.ATTRIBUTE_WRITE, parent=event.activity)
        for attr in event.attributes
    ]


def expand_trace(trace: Trace) -> Trace:
    """Interleave an attribute-write event after each event, one per attribute.

    Existing write events are dropped and regenerated, which makes the
    operation idempotent and keeps writes in sync after an attribute edit.
    Aligned inserts are expanded like observed events.
    """
    out: list[Event] = []
    for event in trace.events:
        if event.kind is EventKind.ATTRIBUTE_WRITE:
            continue
        out.append(event)
        out.extend(write_events(event))
    return Trace(trace.case_id, tuple(out))


def strip_writes(trace: Trace) -> Trace:
    return Trace(trace.case_id, tuple(trace.primary_events()))


def groups(trace: Trace) -> list[tuple[int, int]]:
    """(start, end) index ranges of each primary event with its write children."""
    spans: list[tuple[int, int]] = []
    for i, event in enumerate(trace.events):
        if event.kind is EventKind.ATTRIBUTE_WRITE and spans:
            spans[-1] = (spans[-1][0], i + 1)
        else:
            spans.append((i, i + 1))
    return spans
