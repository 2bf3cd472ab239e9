"""Trace repair by hand-authored alignment steps.

A step is a quadruple (subject, op, value, position) where the position is
a relation plus one or two anchor timestamps. Only three (subject, op)
pairs carry meaning: a missing event is inserted, a surplus event is
deleted, and a wrong data value is overwritten.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from datetime import datetime, timedelta

from .eventlog.expand import groups, write_events
from .eventlog.model import (
    AttributeValue,
    Event,
    EventKind,
    Trace,
    format_timestamp,
    normalize_key,
    normalize_name,
    parse_timestamp,
    to_utc,
)

ONE_US = timedelta(microseconds=1)
ONE_S = timedelta(seconds=1)


class Subject(str, enum.Enum):
    ATTRIBUTE = "ATTRIBUTE"
    EVENT = "EVENT"


class Op(str, enum.Enum):
    INSERT = "INSERT"
    DELETE = "DELETE"
    WRITE = "WRITE"


class Relation(str, enum.Enum):
    BEFORE = "BEFORE"
    AFTER = "AFTER"
    AT = "AT"
    BETWEEN = "BETWEEN"


class Strategy(str, enum.Enum):
    EARLIEST = "EARLIEST"
    LAST = "LAST"
    RANDOM = "RANDOM"


class Outcome(str, enum.Enum):
    APPLIED = "APPLIED"
    ABORTED = "ABORTED"


LEGAL = {(Subject.EVENT, Op.INSERT), (Subject.EVENT, Op.DELETE), (Subject.ATTRIBUTE, Op.WRITE)}


class StepError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


def coerce_enum(cls, raw, name):
    if isinstance(raw, cls):
        return raw
    try:
        return cls(str(raw).strip().upper())
    except ValueError:
        allowed = ", ".join(m.value for m in cls)
        raise StepError("SCHEMA_ERROR", f"{name} must be one of {allowed}, got {raw!r}") from None


@dataclass(frozen=True)
class AlignmentStep:
    subject: Subject
    op: Op
    value: AttributeValue
    relation: Relation
    anchors: tuple[datetime, ...]
    strategy: Strategy = Strategy.EARLIEST
    attribute_key: str | None = None
    activity: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "subject", coerce_enum(Subject, self.subject, "subject"))
        object.__setattr__(self, "op", coerce_enum(Op, self.op, "op"))
        object.__setattr__(self, "relation", coerce_enum(Relation, self.relation, "relation"))
        object.__setattr__(self, "strategy", coerce_enum(Strategy, self.strategy, "strategy"))
        anchors = tuple(to_utc(a) for a in self.anchors)
        expected = 2 if self.relation is Relation.BETWEEN else 1
        if len(anchors) != expected:
            raise StepError("SCHEMA_ERROR",
                            f"{self.relation.value} takes {expected} anchor(s), got {len(anchors)}")
        object.__setattr__(self, "anchors", tuple(sorted(anchors)))
        if (self.subject is Subject.ATTRIBUTE) != (self.attribute_key is not None):
            raise StepError("SCHEMA_ERROR", "attribute_key is required exactly for ATTRIBUTE steps")
        if self.attribute_key is not None:
            object.__setattr__(self, "attribute_key", normalize_key(self.attribute_key))

    @property
    def legal(self) -> bool:
        return (self.subject, self.op) in LEGAL

    def to_wire(self) -> dict:
        out = {
            "subject": self.subject.value,
            "op": self.op.value,
            "value": format_timestamp(self.value) if isinstance(self.value, datetime) else self.value,
            "relation": self.relation.value,
            "anchors": [format_timestamp(a) for a in self.anchors],
            "strategy": self.strategy.value,
        }
        if isinstance(self.value, datetime):
            out["value_type"] = "timestamp"
        if self.attribute_key is not None:
            out["attribute_key"] = self.attribute_key
        if self.activity is not None:
            out["activity"] = self.activity
        return out

    def describe(self) -> str:
        anchors = ", ".join(format_timestamp(a) for a in self.anchors)
        target = f"{self.attribute_key}={self.value!r}" if self.attribute_key else repr(self.value)
        return f"{self.op.value} {self.subject.value} {target} {self.relation.value} [{anchors}]"


def check_combination(subject: Subject, op: Op, relation: Relation) -> None:
    if (subject, op) not in LEGAL:
        raise StepError("ILLEGAL_COMBINATION", f"{op.value} is not defined for subject {subject.value}")
    if op in (Op.DELETE, Op.WRITE) and relation is not Relation.AT:
        raise StepError("ILLEGAL_COMBINATION", f"{op.value} identifies its target exactly; relation must be AT")


def step_from_wire(data: dict, strict: bool = True) -> AlignmentStep:
    """Build a step from its mapping form (as sent over HTTP)."""
    if not isinstance(data, dict):
        raise StepError("SCHEMA_ERROR", "alignment step must be a mapping")
    unknown = set(data) - {"subject", "op", "value", "relation", "anchors", "strategy",
                           "attribute_key", "activity", "value_type"}
    if unknown:
        raise StepError("SCHEMA_ERROR", f"unknown step keys {sorted(unknown)}")
    for key in ("subject", "op", "value", "relation", "anchors"):
        if key not in data:
            raise StepError("SCHEMA_ERROR", f"step is missing {key!r}")
    anchors = data["anchors"]
    if not isinstance(anchors, list):
        raise StepError("SCHEMA_ERROR", "anchors must be a list")
    try:
        parsed = tuple(a if isinstance(a, datetime) else parse_timestamp(str(a)) for a in anchors)
        value = data["value"]
        if data.get("value_type") == "timestamp":
            value = parse_timestamp(str(value))
    except ValueError as exc:
        raise StepError("SCHEMA_ERROR", str(exc)) from exc
    if not isinstance(value, (str, int, float, bool, datetime)):
        raise StepError("SCHEMA_ERROR", f"unsupported step value {value!r}")
    step = AlignmentStep(
        subject=data["subject"], op=data["op"], value=value, relation=data["relation"],
        anchors=parsed, strategy=data.get("strategy") or "EARLIEST",
        attribute_key=data.get("attribute_key"), activity=data.get("activity"),
    )
    if strict:
        check_combination(step.subject, step.op, step.relation)
    return step


@dataclass(frozen=True)
class AlignmentRecord:
    step: AlignmentStep
    resolved_position: int | None
    outcome: Outcome
    reason: str = ""

    def to_dict(self) -> dict:
        return {"step": self.step.to_wire(), "resolved_position": self.resolved_position,
                "outcome": self.outcome.value, "reason": self.reason}


# -- position resolution ---------------------------------------------------

def _bounds(trace: Trace, k: int):
    events = trace.events
    prev = events[k - 1].timestamp if k > 0 else None
    nxt = events[k].timestamp if k < len(events) else None
    return prev, nxt


def _interval(prev, nxt, relation: Relation, anchors) -> tuple[datetime | None, datetime | None]:
    """Feasible closed interval for a new timestamp between ``prev`` and ``nxt``."""
    lo, hi = prev, nxt
    a = anchors[0]
    if relation is Relation.BEFORE:
        hi = a - ONE_US if hi is None else min(hi, a - ONE_US)
    elif relation is Relation.AFTER:
        lo = a + ONE_US if lo is None else max(lo, a + ONE_US)
    elif relation is Relation.AT:
        lo = hi = a
        if (prev is not None and prev > a) or (nxt is not None and nxt < a):
            return a, a - ONE_US
    else:
        b = anchors[1]
        lo = a + ONE_US if lo is None else max(lo, a + ONE_US)
        hi = b - ONE_US if hi is None else min(hi, b - ONE_US)
    return lo, hi


def _feasible(lo, hi) -> bool:
    return lo is None or hi is None or lo <= hi


def conforming_positions(trace: Trace, relation: Relation | str, anchors) -> list[int]:
    """All insertion indices that keep the trace sorted and satisfy the relation.

    Indices inside a group (between an event and its attribute writes) are
    never offered. For AT, if events already sit at the anchor, the new
    event goes after at least one of them.
    """
    relation = Relation(relation)
    anchors = tuple(sorted(to_utc(a) for a in anchors))
    starts = [start for start, _ in groups(trace)] + [len(trace.events)]
    anchor_taken = relation is Relation.AT and any(
        e.timestamp == anchors[0] for e in trace.events)
    out = []
    for k in starts:
        prev, nxt = _bounds(trace, k)
        if anchor_taken and prev != anchors[0]:
            continue
        if _feasible(*_interval(prev, nxt, relation, anchors)):
            out.append(k)
    return out


def resolve_position(trace: Trace, relation, anchors, strategy=Strategy.EARLIEST,
                     rng: random.Random | None = None) -> int | None:
    candidates = conforming_positions(trace, relation, anchors)
    if not candidates:
        return None
    strategy = Strategy(strategy)
    if strategy is Strategy.EARLIEST:
        return candidates[0]
    if strategy is Strategy.LAST:
        return candidates[-1]
    return (rng or random.Random(0)).choice(candidates)


def derive_timestamp(trace: Trace, k: int, relation, anchors) -> datetime:
    """Timestamp for an event inserted at index ``k``.

    AT uses the anchor, AFTER/BEFORE sit one second from the anchor (or at
    the midpoint when the neighbour is closer than two seconds), BETWEEN
    takes the midpoint; the result is clamped into the feasible interval.
    """
    relation = Relation(relation)
    anchors = tuple(sorted(to_utc(a) for a in anchors))
    prev, nxt = _bounds(trace, k)
    lo, hi = _interval(prev, nxt, relation, anchors)
    a = anchors[0]
    if relation is Relation.AT:
        return a
    if relation is Relation.AFTER:
        want = a + ONE_S if nxt is None or nxt - a >= 2 * ONE_S else a + (nxt - a) / 2
    elif relation is Relation.BEFORE:
        want = a - ONE_S if prev is None or a - prev >= 2 * ONE_S else a - (a - prev) / 2
    else:
        want = a + (anchors[1] - a) / 2
    if lo is not None and want < lo:
        want = lo
    if hi is not None and want > hi:
        want = hi
    return want


# -- application -------------------------------------------------------------

def _targets(trace: Trace, anchor: datetime, activity: str | None) -> list[tuple[int, int]]:
    wanted = normalize_name(activity) if activity is not None else None
    hits = []
    for start, end in groups(trace):
        event = trace.events[start]
        if event.timestamp != anchor:
            continue
        if wanted is not None and normalize_name(event.activity) != wanted:
            continue
        hits.append((start, end))
    return hits


def _aborted(step, reason, position=None):
    return AlignmentRecord(step, position, Outcome.ABORTED, reason)


def apply_step(trace: Trace, step: AlignmentStep, rng: random.Random | None = None
               ) -> tuple[Trace, AlignmentRecord]:
    """Apply one step; never raises, failures come back as ABORTED records."""
    try:
        return _apply(trace, step, rng)
    except (ValueError, TypeError) as exc:
        return trace, _aborted(step, f"INVALID_STEP: {exc}")


def _apply(trace, step, rng):
    if not step.legal:
        return trace, _aborted(step, "ILLEGAL_STEP")
    events = list(trace.events)
    if step.op is Op.INSERT:
        k = resolve_position(trace, step.relation, step.anchors, step.strategy, rng)
        if k is None:
            return trace, _aborted(step, "NO_POSITION")
        ts = derive_timestamp(trace, k, step.relation, step.anchors)
        new = Event(str(step.value), ts, (), EventKind.ALIGNED_INSERT)
        events[k:k] = [new, *write_events(new)]
        return Trace(trace.case_id, events), AlignmentRecord(step, k, Outcome.APPLIED)

    activity = str(step.value) if step.op is Op.DELETE else step.activity
    hits = _targets(trace, step.anchors[0], activity)
    if not hits:
        return trace, _aborted(step, "TARGET_NOT_FOUND")
    if len(hits) > 1:
        return trace, _aborted(step, "AMBIGUOUS_TARGET")
    start, end = hits[0]
    if step.op is Op.DELETE:
        del events[start:end]
    else:
        updated = events[start].with_attribute(step.attribute_key, step.value)
        events[start:end] = [updated, *write_events(updated)]
    return Trace(trace.case_id, events), AlignmentRecord(step, start, Outcome.APPLIED)


def apply_steps(trace: Trace, steps, rng: random.Random | None = None
                ) -> tuple[Trace, list[AlignmentRecord]]:
    """Apply steps in order; the first abort skips the rest."""
    records: list[AlignmentRecord] = []
    steps = list(steps)
    for i, step in enumerate(steps):
        new_trace, record = apply_step(trace, step, rng)
        records.append(record)
        if record.outcome is Outcome.ABORTED:
            records.extend(_aborted(s, "SKIPPED") for s in steps[i + 1:])
            return trace, records
        trace = new_trace
    return trace, records


@dataclass(frozen=True)
class StepTemplate:
    """An alignment step as written in a rule, with anchors still unevaluated."""

    subject: Subject
    op: Op
    value: AttributeValue
    relation: Relation
    anchors: tuple  # expression nodes
    strategy: Strategy = Strategy.EARLIEST
    attribute_key: str | None = None
    activity: str | None = None
    anchor_sources: tuple[str, ...] = field(default=(), compare=False)

    @property
    def legal(self) -> bool:
        return (self.subject, self.op) in LEGAL

    def instantiate(self, anchors) -> AlignmentStep:
        return AlignmentStep(self.subject, self.op, self.value, self.relation, tuple(anchors),
                             self.strategy, self.attribute_key, self.activity)
