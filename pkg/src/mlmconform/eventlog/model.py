"""Core event log types: attributes, events, traces, logs."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Union

from ..timestamps import format_timestamp, parse_timestamp, to_utc  # noqa: F401  (re-exported)

AttributeValue = Union[str, int, float, bool, datetime]

_KEY_RE = re.compile(r"^[a-z0-9_]+$")


class EventLogError(Exception):
    """Structured failure raised by the event log layer.

    ``code`` is one of MALFORMED_XML, MISSING_TIMESTAMP, MISSING_ACTIVITY,
    DUPLICATE_CASE_ID, CONFIG_ERROR, CONFIG_PATH_MISS, TIMESTAMP_PARSE_FAIL,
    UNKNOWN_FIELD, QUERY_SYNTAX, UNSERIALIZABLE.
    """

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class EventKind(str, enum.Enum):
    OBSERVED = "OBSERVED"
    ATTRIBUTE_WRITE = "ATTRIBUTE_WRITE"
    ALIGNED_INSERT = "ALIGNED_INSERT"


def normalize_key(key: str) -> str:
    """Lowercase an attribute key and map everything outside [a-z0-9_] to ``_``."""
    return re.sub(r"[^a-z0-9_]", "_", key.strip().lower())


def normalize_name(text: str) -> str:
    """Normalize an event name or attribute value for evocation lookup.

    Lowercases and maps every character outside ``[a-z0-9._]`` to ``_``.
    The dot survives so that ``C43.9`` becomes ``c43.9``.
    """
    return re.sub(r"[^a-z0-9._]", "_", text.strip().lower())


def value_type(value: AttributeValue) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, datetime):
        return "date"
    return "string"


def format_value(value: AttributeValue) -> str:
    """Canonical text form of an attribute value (used by XES and write names)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, datetime):
        return format_timestamp(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class Attribute:
    key: str
    value: AttributeValue

    def __post_init__(self):
        if not self.key or not _KEY_RE.match(self.key):
            raise ValueError(f"invalid attribute key {self.key!r}")
        if not isinstance(self.value, (str, int, float, bool, datetime)):
            raise TypeError(f"unsupported attribute value {self.value!r}")
        if isinstance(self.value, datetime):
            object.__setattr__(self, "value", to_utc(self.value))

    @property
    def type(self) -> str:
        return value_type(self.value)


@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: datetime
    attributes: tuple[Attribute, ...] = ()
    kind: EventKind = EventKind.OBSERVED
    parent: str | None = None

    def __post_init__(self):
        if not self.activity:
            raise ValueError("event activity must be non-empty")
        object.__setattr__(self, "timestamp", to_utc(self.timestamp))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "kind", EventKind(self.kind))
        keys = [a.key for a in self.attributes]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate attribute keys on {self.activity!r}")
        if self.kind is EventKind.ATTRIBUTE_WRITE:
            if len(self.attributes) != 1 or self.parent is None:
                raise ValueError("attribute-write events carry one attribute and a parent")

    @property
    def name(self) -> str:
        """Name used for evocation lookup."""
        return normalize_name(self.activity)

    def get(self, key: str, default=None):
        for attr in self.attributes:
            if attr.key == key:
                return attr.value
        return default

    def with_attribute(self, key: str, value: AttributeValue) -> Event:
        attrs = list(self.attributes)
        for i, attr in enumerate(attrs):
            if attr.key == key:
                attrs[i] = Attribute(key, value)
                break
        else:
            attrs.append(Attribute(key, value))
        return Event(self.activity, self.timestamp, tuple(attrs), self.kind, self.parent)


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple[Event, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        for prev, cur in zip(self.events, self.events[1:]):
            if cur.timestamp < prev.timestamp:
                raise ValueError(
                    f"trace {self.case_id!r} is not sorted at {cur.activity!r}")

    def __len__(self) -> int:
        return len(self.events)

    @classmethod
    def sorted(cls, case_id: str, events) -> Trace:
        """Build a trace, stable-sorting events by timestamp."""
        return cls(case_id, tuple(sorted(events, key=lambda e: e.timestamp)))

    def primary_events(self) -> list[Event]:
        return [e for e in self.events if e.kind is not EventKind.ATTRIBUTE_WRITE]


@dataclass(frozen=True)
class EventLog:
    traces: tuple[Trace, ...] = ()
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        seen = set()
        for trace in self.traces:
            if trace.case_id in seen:
                raise EventLogError("DUPLICATE_CASE_ID", f"case id {trace.case_id!r} repeats")
            seen.add(trace.case_id)

    def __len__(self) -> int:
        return len(self.traces)
