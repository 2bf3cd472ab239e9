"""Config-driven conversion of arbitrary XML exports into event logs.

A converter config is a YAML document::

    case:
      path: patient            # case elements, relative to the document root
      id: "@patient_id"        # relative to the case element
    timestamp:
      path: "@date"            # relative to each event element
      format: "%Y-%m-%d"       # strptime format, or "iso"
      sample: "2021-01-10"     # must parse under ``format``
    events:
      - path: diagnosis        # relative to the case element
        activity: Diagnosis    # literal name (or ``activity_path``)
        attributes:
          - {key: ICD-Code, path: icd_code, type: string}

Paths are ElementTree paths. A trailing ``@name`` step reads an XML
attribute, ``.`` reads the element's own text, anything else reads the text
of the first matching element. Every matched element becomes an event; no
activity is filtered out.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import yaml

from .model import (
    Attribute,
    Event,
    EventLog,
    EventLogError,
    Trace,
    normalize_key,
    parse_timestamp,
    to_utc,
)
from .xes import read_xml

ATTRIBUTE_TYPES = ("string", "int", "float", "boolean", "date")


@dataclass(frozen=True)
class AttributeRule:
    key: str
    path: str
    type: str = "string"
    required: bool = False
    format: str | None = None


@dataclass(frozen=True)
class EventRule:
    path: str
    activity: str | None = None
    activity_path: str | None = None
    timestamp_path: str | None = None
    attributes: tuple[AttributeRule, ...] = ()


@dataclass(frozen=True)
class ConverterConfig:
    case_path: str
    case_id_path: str
    timestamp_path: str
    timestamp_format: str
    events: tuple[EventRule, ...]
    timestamp_sample: str | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for path in self.paths():
            check_path(path)
        if self.timestamp_sample is not None:
            try:
                parse_with_format(self.timestamp_sample, self.timestamp_format)
            except ValueError as exc:
                raise EventLogError(
                    "CONFIG_ERROR",
                    f"sample timestamp {self.timestamp_sample!r} does not parse "
                    f"under {self.timestamp_format!r}") from exc
        for rule in self.events:
            if (rule.activity is None) == (rule.activity_path is None):
                raise EventLogError(
                    "CONFIG_ERROR", f"event rule {rule.path!r} needs exactly one of activity/activity_path")
            for attr in rule.attributes:
                if attr.type not in ATTRIBUTE_TYPES:
                    raise EventLogError("CONFIG_ERROR", f"unknown attribute type {attr.type!r}")

    def paths(self):
        yield self.case_path
        yield self.case_id_path
        yield self.timestamp_path
        for rule in self.events:
            yield rule.path
            for p in (rule.activity_path, rule.timestamp_path):
                if p:
                    yield p
            for attr in rule.attributes:
                yield attr.path


def _split(path: str) -> tuple[str | None, str | None]:
    """Split ``a/b/@x`` into (element path, attribute name)."""
    head, sep, attr = path.rpartition("@")
    if sep and "/" not in attr and "[" not in attr:
        head = head.rstrip("/")
        return (head or None), attr
    return path, None


def check_path(path: str) -> None:
    if not isinstance(path, str) or not path.strip():
        raise EventLogError("CONFIG_ERROR", f"empty path {path!r}")
    elem_path, attr = _split(path)
    if attr is not None and not attr:
        raise EventLogError("CONFIG_ERROR", f"empty attribute name in {path!r}")
    if elem_path and elem_path != ".":
        try:
            ET.Element("probe").findall(elem_path)
        except (SyntaxError, KeyError, TypeError) as exc:
            raise EventLogError("CONFIG_ERROR", f"invalid path {path!r}: {exc}") from exc


def parse_with_format(text: str, fmt: str) -> datetime:
    if fmt == "iso":
        return parse_timestamp(text)
    return to_utc(datetime.strptime(text.strip(), fmt))


def resolve(elem: ET.Element, path: str) -> str | None:
    elem_path, attr = _split(path)
    target = elem
    if elem_path and elem_path != ".":
        target = elem.find(elem_path)
        if target is None:
            return None
    if attr is not None:
        return target.get(attr)
    text = (target.text or "").strip()
    return text or None


def _attr_rule(raw) -> AttributeRule:
    if not isinstance(raw, dict) or "key" not in raw or "path" not in raw:
        raise EventLogError("CONFIG_ERROR", f"attribute rule needs key and path: {raw!r}")
    return AttributeRule(str(raw["key"]), str(raw["path"]), str(raw.get("type", "string")),
                         bool(raw.get("required", False)), raw.get("format"))


def load_config(source: str | Path | dict) -> ConverterConfig:
    """Load a converter config from a YAML file path, YAML text, or a mapping."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                    and Path(source).is_file()):
        source = Path(source).read_text(encoding="utf-8")
    if isinstance(source, str):
        try:
            source = yaml.safe_load(source)
        except yaml.YAMLError as exc:
            raise EventLogError("CONFIG_ERROR", f"config is not valid YAML: {exc}") from exc
    if not isinstance(source, dict):
        raise EventLogError("CONFIG_ERROR", "config must be a mapping")
    try:
        case = source["case"]
        ts = source["timestamp"]
        events = source["events"]
        rules = tuple(
            EventRule(
                path=str(r["path"]),
                activity=r.get("activity"),
                activity_path=r.get("activity_path"),
                timestamp_path=r.get("timestamp_path"),
                attributes=tuple(_attr_rule(a) for a in r.get("attributes") or ()),
            )
            for r in events
        )
        return ConverterConfig(
            case_path=str(case["path"]),
            case_id_path=str(case["id"]),
            timestamp_path=str(ts["path"]),
            timestamp_format=str(ts.get("format", "iso")),
            timestamp_sample=None if ts.get("sample") is None else str(ts["sample"]),
            events=rules,
            metadata={str(k): str(v) for k, v in (source.get("metadata") or {}).items()},
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise EventLogError("CONFIG_ERROR", f"missing or malformed config entry: {exc}") from exc


def _typed(raw: str, rule: AttributeRule, where: str):
    try:
        if rule.type == "int":
            return int(raw)
        if rule.type == "float":
            return float(raw)
        if rule.type == "boolean":
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if rule.type == "date":
            return parse_with_format(raw, rule.format or "iso")
    except ValueError as exc:
        code = "TIMESTAMP_PARSE_FAIL" if rule.type == "date" else "VALUE_PARSE_FAIL"
        raise EventLogError(code, f"{where}: {rule.key}={raw!r} is not a valid {rule.type}") from exc
    return raw


def convert_xml(document: bytes | str, config: ConverterConfig) -> EventLog:
    root = read_xml(document)

    cases: dict[str, list[Event]] = {}
    for c_index, case_elem in enumerate(root.findall(config.case_path)):
        case_id = resolve(case_elem, config.case_id_path)
        if case_id is None:
            raise EventLogError("CONFIG_PATH_MISS",
                                f"case {c_index}: no case id at {config.case_id_path!r}")
        order = {id(el): i for i, el in enumerate(case_elem.iter())}
        matches = []
        for rule in config.events:
            for e_index, elem in enumerate(case_elem.findall(rule.path)):
                where = f"case {case_id!r} {rule.path}[{e_index}]"
                matches.append((order.get(id(elem), -1), _convert_event(elem, rule, config, where)))
        # document order first so timestamp ties keep it after the stable sort
        matches.sort(key=lambda m: m[0])
        cases.setdefault(case_id, []).extend(event for _, event in matches)

    traces = [Trace.sorted(cid, events) for cid, events in cases.items()]
    return EventLog(tuple(traces), dict(config.metadata))


def _convert_event(elem: ET.Element, rule: EventRule, config: ConverterConfig, where: str) -> Event:
    if rule.activity is not None:
        activity = rule.activity
    else:
        activity = resolve(elem, rule.activity_path)
        if activity is None:
            raise EventLogError("CONFIG_PATH_MISS", f"{where}: no activity at {rule.activity_path!r}")
    ts_path = rule.timestamp_path or config.timestamp_path
    raw_ts = resolve(elem, ts_path)
    if raw_ts is None:
        raise EventLogError("CONFIG_PATH_MISS", f"{where}: no timestamp at {ts_path!r}")
    try:
        timestamp = parse_with_format(raw_ts, config.timestamp_format)
    except ValueError as exc:
        raise EventLogError("TIMESTAMP_PARSE_FAIL",
                            f"{where}: {raw_ts!r} does not match {config.timestamp_format!r}") from exc
    attrs: dict[str, Attribute] = {}
    for attr_rule in rule.attributes:
        raw = resolve(elem, attr_rule.path)
        if raw is None:
            if attr_rule.required:
                raise EventLogError("CONFIG_PATH_MISS", f"{where}: required {attr_rule.path!r} absent")
            continue
        key = normalize_key(attr_rule.key)
        attrs.setdefault(key, Attribute(key, _typed(raw, attr_rule, where)))
    return Event(activity, timestamp, tuple(attrs.values()))
