from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from datetime import datetime

from ..alignment import AlignmentStep, StepError, StepTemplate
from ..eventlog.model import Event, Trace
from ..mlm.ast import format_expr
from ..mlm.model import Mlm
from .evaluator import Compiled, EvaluationError, TraceEnv, compile_expr


@dataclass(frozen=True)
class Verdict:
    """Outcome of one rule evaluation.

    A conforming verdict carries the rule's describing metadata; a
    violation carries the alignment steps instantiated against the trace.
    ``error`` explains violations that could not be evaluated or repaired.
    """

    mlm: str
    event_index: int
    conform: bool
    metadata: dict = field(default_factory=dict)
    steps: tuple[AlignmentStep, ...] = ()
    error: str | None = None

    @property
    def repairable(self) -> bool:
        return not self.conform and bool(self.steps)


@dataclass(frozen=True)
class CompiledMlm:
    mlm: Mlm
    logic: Compiled
    anchors: tuple[tuple[Compiled, ...], ...]

    @property
    def name(self) -> str:
        return self.mlm.name


def compile_mlm(mlm: Mlm) -> CompiledMlm:
    anchors = tuple(tuple(compile_expr(a) for a in t.anchors) for t in mlm.action.on_violation)
    return CompiledMlm(mlm, compile_expr(mlm.logic), anchors)


class Registry:
    """Rules indexed by the event names that evoke them."""

    def __init__(self, mlms: Iterable[Mlm]):
        compiled = sorted((compile_mlm(m) for m in mlms), key=lambda c: c.name)
        self.rules: tuple[CompiledMlm, ...] = tuple(compiled)
        index: dict[str, list[CompiledMlm]] = {}
        for c in compiled:
            for name in c.mlm.evoke:
                index.setdefault(name, []).append(c)
        self._index = {k: tuple(v) for k, v in index.items()}

    @property
    def event_names(self) -> frozenset[str]:
        return frozenset(self._index)

    def subscribers(self, event: Event) -> tuple[CompiledMlm, ...]:
        return self._index.get(event.name, ())

    def __len__(self) -> int:
        return len(self.rules)


def build_registry(mlms: Iterable[Mlm]) -> Registry:
    return Registry(mlms)


def _instantiate(template: StepTemplate, fns, env) -> AlignmentStep:
    values = [fn(env) for fn in fns]
    for src, v in zip(template.anchors, values):
        if not isinstance(v, datetime):
            shown = "null" if v is None else type(v).__name__
            raise EvaluationError(f"anchor {format_expr(src)!r} evaluated to {shown}")
    return template.instantiate(values)


def run_rule(rule: CompiledMlm, trace: Trace, index: int) -> Verdict:
    env = TraceEnv(rule.mlm.data, trace)
    name = rule.name
    try:
        holds = rule.logic(env)
        if holds is not None and not isinstance(holds, bool):
            raise EvaluationError(f"logic produced {type(holds).__name__}, not a boolean")
    except EvaluationError as exc:
        return Verdict(name, index, False, error=f"evaluation failed: {exc}")
    if holds:
        return Verdict(name, index, True, rule.mlm.describing_metadata())
    try:
        steps = tuple(_instantiate(t, fns, env)
                      for t, fns in zip(rule.mlm.action.on_violation, rule.anchors))
    except (EvaluationError, StepError) as exc:
        return Verdict(name, index, False, error=f"cannot build alignment: {exc}")
    note = None if steps else "violation has no alignment steps"
    return Verdict(name, index, False, steps=steps, error=note)


def evoke(registry: Registry, trace: Trace, index: int) -> list[Verdict]:
    """Evaluate every rule subscribed to the event at ``index``."""
    event = trace.events[index]
    return [run_rule(rule, trace, index) for rule in registry.subscribers(event)]


def eval_logic(mlm: Mlm, trace: Trace) -> bool:
    """Evaluate a rule's logic against a trace; raises EvaluationError."""
    value = compile_expr(mlm.logic)(TraceEnv(mlm.data, trace))
    return value is True


def evoke_all(registry: Registry, trace: Trace) -> Iterator[list[Verdict]]:
    for i in range(len(trace.events)):
        yield evoke(registry, trace, i)


def first_evocations(verdicts: Iterable[Verdict]) -> dict[str, Verdict]:
    """The first verdict of each rule, in evocation order."""
    out: dict[str, Verdict] = {}
    for v in verdicts:
        out.setdefault(v.mlm, v)
    return out
