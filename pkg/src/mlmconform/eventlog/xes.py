"""Reading and writing the structural subset of IEEE XES used by the engine."""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET

from .model import (
    Attribute,
    Event,
    EventKind,
    EventLog,
    EventLogError,
    Trace,
    format_timestamp,
    format_value,
    normalize_key,
    parse_timestamp,
    value_type,
)

ACTIVITY_KEY = "concept:name"
TIMESTAMP_KEY = "time:timestamp"
KIND_KEY = "mlmconform:kind"
PARENT_KEY = "mlmconform:parent"

_TYPED = {"string", "date", "int", "float", "boolean", "id"}
# characters XML 1.0 cannot carry, even escaped
_NOT_XML = re.compile("[^\t\n\r\x20-\ud7ff\ue000-\ufffd\U00010000-\U0010ffff]")


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _typed_value(elem: ET.Element, where: str):
    tag = _local(elem.tag)
    raw = elem.get("value")
    if raw is None:
        raw = ""
    try:
        if tag == "int":
            return int(raw)
        if tag == "float":
            return float(raw)
        if tag == "boolean":
            if raw.strip().lower() not in ("true", "false"):
                raise ValueError(raw)
            return raw.strip().lower() == "true"
        if tag == "date":
            return parse_timestamp(raw)
    except (ValueError, OverflowError) as exc:
        raise EventLogError("MALFORMED_XML", f"{where}: bad {tag} value {raw!r}") from exc
    return raw


def _read_attributes(parent: ET.Element, where: str) -> list[tuple[str, object]]:
    out = []
    for child in parent:
        tag = _local(child.tag)
        if tag in ("trace", "event", "extension", "global", "classifier"):
            continue
        key = child.get("key")
        if key is None:
            continue
        if tag in _TYPED:
            out.append((key, _typed_value(child, where)))
        else:
            # unknown extension elements (list, container, ...) stay opaque
            out.append((key, child.get("value") or ET.tostring(child, encoding="unicode")))
    return out


def _build_attributes(pairs, where: str) -> tuple[Attribute, ...]:
    attrs: dict[str, Attribute] = {}
    for key, value in pairs:
        norm = normalize_key(key)
        if not norm:
            raise EventLogError("MALFORMED_XML", f"{where}: empty attribute key")
        attrs.setdefault(norm, Attribute(norm, value))
    return tuple(attrs.values())


def _read_event(elem: ET.Element, case_id: str, index: int) -> Event:
    where = f"trace {case_id!r} event {index}"
    activity = timestamp = parent = None
    kind = EventKind.OBSERVED
    rest = []
    for key, value in _read_attributes(elem, where):
        if key == ACTIVITY_KEY:
            activity = str(value)
        elif key == TIMESTAMP_KEY:
            timestamp = value
        elif key == KIND_KEY:
            try:
                kind = EventKind(str(value))
            except ValueError as exc:
                raise EventLogError("MALFORMED_XML", f"{where}: unknown kind {value!r}") from exc
        elif key == PARENT_KEY:
            parent = str(value)
        else:
            rest.append((key, value))
    if not activity:
        raise EventLogError("MISSING_ACTIVITY", f"{where} has no {ACTIVITY_KEY}")
    if timestamp is None:
        raise EventLogError("MISSING_TIMESTAMP", f"{where} has no {TIMESTAMP_KEY}")
    if not hasattr(timestamp, "tzinfo"):
        raise EventLogError("MALFORMED_XML", f"{where}: {TIMESTAMP_KEY} must be a date")
    try:
        return Event(activity, timestamp, _build_attributes(rest, where), kind, parent)
    except ValueError as exc:
        raise EventLogError("MALFORMED_XML", f"{where}: {exc}") from exc


def read_xml(document: bytes | str) -> ET.Element:
    """Parse untrusted XML; every failure is a MALFORMED_XML EventLogError."""
    if isinstance(document, str):
        try:
            document = document.encode("utf-8")
        except UnicodeEncodeError as exc:
            raise EventLogError("MALFORMED_XML", f"document is not encodable text: {exc}") from None
    # no DTDs: entity expansion is the classic XML denial of service
    if b"<!DOCTYPE" in document or b"<!ENTITY" in document:
        raise EventLogError("MALFORMED_XML", "DTDs are not accepted")
    try:
        return ET.fromstring(document)
    except ET.ParseError as exc:
        raise EventLogError("MALFORMED_XML", str(exc)) from exc
    except (ValueError, LookupError, RecursionError) as exc:  # LookupError: unknown declared encoding
        raise EventLogError("MALFORMED_XML", str(exc)) from exc


def parse_xes(document: bytes | str) -> EventLog:
    """Parse an XES document into an :class:`EventLog`.

    Events are stable-sorted by timestamp inside each trace; traces without a
    ``concept:name`` get a positional id.
    """
    root = read_xml(document)
    if _local(root.tag) != "log":
        raise EventLogError("MALFORMED_XML", f"root element is <{_local(root.tag)}>, expected <log>")

    metadata = {}
    for key, value in _read_attributes(root, "log"):
        metadata[key] = format_value(value)

    traces = []
    for t_index, t_elem in enumerate(c for c in root if _local(c.tag) == "trace"):
        pairs = _read_attributes(t_elem, f"trace {t_index}")
        case_id = next((str(v) for k, v in pairs if k == ACTIVITY_KEY), str(t_index))
        events = [
            _read_event(e, case_id, i)
            for i, e in enumerate(c for c in t_elem if _local(c.tag) == "event")
        ]
        traces.append(Trace.sorted(case_id, events))
    return EventLog(tuple(traces), metadata)


def _attr_elem(parent: ET.Element, key: str, value) -> None:
    vt = value_type(value)
    ET.SubElement(parent, vt, key=key, value=format_value(value))


def serialize_xes(log: EventLog, include_writes: bool = True) -> bytes:
    root = ET.Element("log", {"xes.version": "1.0", "xes.features": ""})
    ET.SubElement(root, "extension", name="Concept", prefix="concept",
                  uri="http://www.xes-standard.org/concept.xesext")
    ET.SubElement(root, "extension", name="Time", prefix="time",
                  uri="http://www.xes-standard.org/time.xesext")
    for key, value in log.metadata.items():
        ET.SubElement(root, "string", key=key, value=value)
    for trace in log.traces:
        t_elem = ET.SubElement(root, "trace")
        ET.SubElement(t_elem, "string", key=ACTIVITY_KEY, value=trace.case_id)
        for event in trace.events:
            if event.kind is EventKind.ATTRIBUTE_WRITE and not include_writes:
                continue
            e_elem = ET.SubElement(t_elem, "event")
            ET.SubElement(e_elem, "string", key=ACTIVITY_KEY, value=event.activity)
            ET.SubElement(e_elem, "date", key=TIMESTAMP_KEY,
                          value=format_timestamp(event.timestamp))
            if event.kind is not EventKind.OBSERVED:
                ET.SubElement(e_elem, "string", key=KIND_KEY, value=event.kind.value)
            if event.parent is not None:
                ET.SubElement(e_elem, "string", key=PARENT_KEY, value=event.parent)
            for attr in event.attributes:
                _attr_elem(e_elem, attr.key, attr.value)
    ET.indent(root)
    for elem in root.iter():
        for text in elem.attrib.values():
            bad = _NOT_XML.search(text)
            if bad:
                raise EventLogError("UNSERIALIZABLE",
                                    f"character U+{ord(bad.group()):04X} cannot be written to XML")
    return ET.tostring(root, encoding="utf-8", xml_declaration=True)
