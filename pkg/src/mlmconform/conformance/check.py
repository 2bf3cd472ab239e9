"""Check traces against a rule model, repairing them with alignment steps.

One pass walks the expanded trace and evokes the rules subscribed to each
event. When alignment is on, the first violation that carries steps is
repaired and the walk restarts from the top of the repaired trace, so
earlier events are re-checked against the change.
"""

from __future__ import annotations

import enum
import itertools
import random
from collections.abc import Callable, Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from ..alignment import AlignmentRecord, Outcome, apply_steps
from ..engine import Registry, Verdict, build_registry, evoke_all, first_evocations
from ..eventlog.expand import expand_trace
from ..eventlog.model import EventLog, Trace

# one list of verdicts per event index, produced lazily
PassEvaluator = Callable[[Trace], Iterable[list[Verdict]]]


class Terminated(str, enum.Enum):
    STABLE = "STABLE"
    ABORTED = "ABORTED"
    RESTART_LIMIT = "RESTART_LIMIT"
    ERROR = "ERROR"


@dataclass(frozen=True)
class RunConfig:
    align: bool = False
    max_restarts: int = 50
    random_seed: int = 0
    persist_attribute_writes: bool = False

    def __post_init__(self):
        if isinstance(self.max_restarts, bool) or not isinstance(self.max_restarts, int) \
                or self.max_restarts < 1:
            raise ValueError("max_restarts must be a positive integer")
        if isinstance(self.random_seed, bool) or not isinstance(self.random_seed, int):
            raise ValueError("random_seed must be an integer")

    def to_dict(self) -> dict:
        return {"align": self.align, "max_restarts": self.max_restarts,
                "random_seed": self.random_seed,
                "persist_attribute_writes": self.persist_attribute_writes}


@dataclass(frozen=True)
class TraceResult:
    case_id: str
    evoked_mlms: frozenset[str]
    verdicts: dict[str, Verdict]
    initial_verdicts: dict[str, Verdict]
    alignment_records: tuple[AlignmentRecord, ...]
    restarts_used: int
    fitness_initial: float | None
    fitness_final: float | None
    terminated: Terminated
    notes: tuple[str, ...] = ()
    error: str | None = None
    final_trace: Trace | None = field(default=None, compare=False, repr=False)

    @property
    def unevaluated(self) -> bool:
        """No rule was evoked, so a fitness of 1.0 is vacuous."""
        return not self.verdicts

    @property
    def unevaluated_initial(self) -> bool:
        return not self.initial_verdicts


def fitness(verdicts: Mapping[str, Verdict] | Iterable[Verdict]) -> float:
    """Share of evoked rules whose first evaluation conforms; 1.0 if none were evoked."""
    values = list(verdicts.values()) if isinstance(verdicts, Mapping) else list(verdicts)
    if not values:
        return 1.0
    return sum(1 for v in values if v.conform) / len(values)


def trace_rng(seed: int, case_id: str) -> random.Random:
    # per trace so results do not depend on trace order or parallelism
    return random.Random(f"{seed}:{case_id}")


def _scan(lists: Iterable[list[Verdict]]) -> tuple[list[Verdict], Verdict | None]:
    """Consume verdict lists until the first repairable violation."""
    seen: list[Verdict] = []
    for vs in lists:
        seen.extend(vs)
        for v in vs:
            if v.repairable:
                return seen, v
    return seen, None


def _full(evaluate: PassEvaluator, trace: Trace) -> list[Verdict]:
    return list(itertools.chain.from_iterable(evaluate(trace)))


def _as_evaluator(model) -> PassEvaluator:
    registry = model if isinstance(model, Registry) else build_registry(model)
    return lambda trace: evoke_all(registry, trace)


def check_trace(trace: Trace, model, config: RunConfig | None = None,
                evaluate: PassEvaluator | None = None) -> TraceResult:
    """Check one raw trace. ``model`` is a Registry or a list of rules.

    ``evaluate`` replaces local evocation (e.g. by calls to a rule server).
    """
    config = config or RunConfig()
    evaluate = evaluate or _as_evaluator(model)
    current = expand_trace(trace)
    first_pass = list(evaluate(current))
    initial = first_evocations(itertools.chain.from_iterable(first_pass))
    records: list[AlignmentRecord] = []
    notes: list[str] = []
    restarts = 0
    terminated = Terminated.STABLE
    final_verdicts: list[Verdict]

    if not config.align:
        final_verdicts = list(itertools.chain.from_iterable(first_pass))
    else:
        rng = trace_rng(config.random_seed, trace.case_id)
        seen_versions = {current.events}
        final_verdicts, hit = _scan(first_pass)
        while hit is not None:
            aligned, recs = apply_steps(current, hit.steps, rng)
            records.extend(recs)
            if any(r.outcome is Outcome.ABORTED for r in recs):
                terminated = Terminated.ABORTED
                reason = next(r.reason for r in recs if r.outcome is Outcome.ABORTED)
                notes.append(f"alignment for {hit.mlm} aborted: {reason}")
                break
            current = aligned
            if current.events in seen_versions:
                terminated = Terminated.RESTART_LIMIT
                notes.append(f"alignment for {hit.mlm} recreated an earlier trace version (cycle)")
                break
            if restarts >= config.max_restarts:
                terminated = Terminated.RESTART_LIMIT
                notes.append(f"restart limit {config.max_restarts} reached")
                break
            seen_versions.add(current.events)
            restarts += 1
            final_verdicts, hit = _scan(evaluate(current))
        if terminated is not Terminated.STABLE:
            final_verdicts = _full(evaluate, current)
        else:
            broken = sorted({v.mlm for v in final_verdicts if not v.conform})
            if broken:
                terminated = Terminated.ABORTED
                notes.append("unrepairable violation: " + ", ".join(broken))

    final = first_evocations(final_verdicts)
    return TraceResult(
        case_id=trace.case_id,
        evoked_mlms=frozenset(final),
        verdicts=final,
        initial_verdicts=initial,
        alignment_records=tuple(records),
        restarts_used=restarts,
        fitness_initial=fitness(initial),
        fitness_final=fitness(final),
        terminated=terminated,
        notes=tuple(notes),
        final_trace=current,
    )


def _failed(trace: Trace, exc: Exception) -> TraceResult:
    return TraceResult(trace.case_id, frozenset(), {}, {}, (), 0, None, None, Terminated.ERROR,
                       error=f"{type(exc).__name__}: {exc}")


def check_log(log: EventLog, model, config: RunConfig | None = None,
              evaluate: PassEvaluator | None = None, workers: int = 1):
    """Check every trace; a failure in one trace is recorded, not raised."""
    from .report import ConformanceReport

    config = config or RunConfig()
    if evaluate is None:
        evaluate = _as_evaluator(model)

    def one(trace: Trace) -> TraceResult:
        try:
            return check_trace(trace, model, config, evaluate)
        except Exception as exc:  # isolate per-trace failures
            return _failed(trace, exc)

    if workers > 1 and len(log.traces) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, log.traces))
    else:
        results = [one(t) for t in log.traces]
    results.sort(key=lambda r: r.case_id)
    return ConformanceReport(tuple(results), config)
