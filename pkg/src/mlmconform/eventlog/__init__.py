from .convert import ConverterConfig, convert_xml, load_config
from .expand import expand_trace, strip_writes, write_event_name
from .model import (
    Attribute,
    Event,
    EventKind,
    EventLog,
    EventLogError,
    Trace,
    normalize_key,
    normalize_name,
    parse_timestamp,
)
from .query import TraceQuery, parse_query, query_trace
from .xes import parse_xes, serialize_xes

__all__ = [
    "Attribute",
    "ConverterConfig",
    "Event",
    "EventKind",
    "EventLog",
    "EventLogError",
    "Trace",
    "TraceQuery",
    "convert_xml",
    "expand_trace",
    "load_config",
    "normalize_key",
    "normalize_name",
    "parse_query",
    "parse_timestamp",
    "parse_xes",
    "query_trace",
    "serialize_xes",
    "strip_writes",
    "write_event_name",
]
