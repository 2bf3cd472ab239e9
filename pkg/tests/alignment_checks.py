"""Random alignment steps and the invariants each application must keep."""

from __future__ import annotations

import random

from generators import ACTIVITIES, random_timestamp, random_trace
from mlmconform.alignment import AlignmentStep, Op, Outcome, Relation, apply_step
from mlmconform.eventlog.expand import expand_trace, groups
from mlmconform.eventlog.model import Event, EventKind, Trace
from oracles import brute_positions, relation_holds


def random_case(rng: random.Random):
    base = random_trace(rng, max_events=10)
    if base.events and rng.random() < 0.3:
        # a second event at the same instant makes targets ambiguous
        twin = rng.choice(base.events)
        base = Trace.sorted(base.case_id, [*base.events, Event(twin.activity, twin.timestamp)])
    trace = expand_trace(base)
    primaries = trace.primary_events()

    def anchor():
        if primaries and rng.random() < 0.6:
            return rng.choice(primaries).timestamp
        return random_timestamp(rng)

    kind = rng.choice(("insert", "insert", "delete", "write"))
    if kind == "insert":
        relation = rng.choice(list(Relation))
        anchors = (anchor(), anchor()) if relation is Relation.BETWEEN else (anchor(),)
        step = AlignmentStep("EVENT", "INSERT", rng.choice(ACTIVITIES), relation, anchors,
                             rng.choice(("EARLIEST", "LAST", "RANDOM")))
        return trace, step
    if primaries and rng.random() < 0.7:
        target = rng.choice(primaries)
        at, activity = target.timestamp, target.activity
    else:
        at, activity = anchor(), rng.choice(ACTIVITIES)
    if kind == "delete":
        step = AlignmentStep("EVENT", "DELETE", activity, "AT", (at,))
    else:
        step = AlignmentStep("ATTRIBUTE", "WRITE", rng.choice((1, "p", 2.5)), "AT", (at,),
                             attribute_key=rng.choice(("x", "y", "fresh")),
                             activity=rng.choice((None, activity)))
    return trace, step


def _targets(trace, step):
    wanted = str(step.value) if step.op is Op.DELETE else step.activity
    return [(s, e) for s, e in groups(trace)
            if trace.events[s].timestamp == step.anchors[0]
            and (wanted is None or trace.events[s].name == wanted.lower())]


def invariant_failures(trace, step, rng) -> list[str]:
    """Apply ``step`` and list every broken invariant (empty when all hold)."""
    out, record = apply_step(trace, step, rng)
    fails = []
    ts = [e.timestamp for e in out.events]
    if ts != sorted(ts):
        fails.append("result not sorted")
    if out != expand_trace(out):
        fails.append("writes out of sync with attributes")
    if record.outcome is Outcome.ABORTED:
        if out != trace:
            fails.append("aborted step changed the trace")
    if step.op is Op.INSERT:
        expected = brute_positions(trace.events, step.relation.value, step.anchors)
        if record.outcome is Outcome.ABORTED:
            if expected or record.reason != "NO_POSITION":
                fails.append(f"insert aborted ({record.reason}) with positions {expected}")
            return fails
        k = record.resolved_position
        if k not in expected:
            fails.append(f"position {k} not in {expected}")
        new = out.events[k]
        if len(out) != len(trace) + 1 or new.kind is not EventKind.ALIGNED_INSERT:
            fails.append("insert did not add exactly one aligned event")
        if not relation_holds(step.relation.value, new.timestamp, step.anchors):
            fails.append("inserted timestamp violates the relation")
        if out.events[:k] + out.events[k + 1:] != trace.events:
            fails.append("insert disturbed other events")
        return fails
    hits = _targets(trace, step)
    if len(hits) != 1:
        reason = "TARGET_NOT_FOUND" if not hits else "AMBIGUOUS_TARGET"
        if record.outcome is not Outcome.ABORTED or record.reason != reason:
            fails.append(f"expected abort {reason}, got {record.outcome.value} {record.reason}")
        return fails
    if record.outcome is not Outcome.APPLIED:
        fails.append(f"unique target but {record.reason}")
        return fails
    start, end = hits[0]
    target = trace.events[start]
    if step.op is Op.DELETE:
        if len(out) != len(trace) - 1 - len(target.attributes):
            fails.append("delete cardinality")
        if out.events != trace.events[:start] + trace.events[end:]:
            fails.append("delete removed the wrong events")
    else:
        if len(out.primary_events()) != len(trace.primary_events()):
            fails.append("write changed the number of events")
        if out.events[start].get(step.attribute_key) != step.value:
            fails.append("write did not set the value")
        if out.events[:start] != trace.events[:start]:
            fails.append("write disturbed earlier events")
    return fails
