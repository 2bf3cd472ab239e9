from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from ..alignment import Op, Outcome
from ..engine import Verdict
from ..wire import verdict_to_wire
from .check import RunConfig, Terminated, TraceResult

REPORT_FORMAT = "mlmconform-report/1"


def _stats(values: list[float]) -> dict:
    if not values:
        return {"mean": 0.0, "min": 0.0, "max": 0.0}
    return {"mean": sum(values) / len(values), "min": min(values), "max": max(values)}


def _verdict_rows(verdicts: dict[str, Verdict]) -> list[dict]:
    return [verdict_to_wire(verdicts[name]) for name in sorted(verdicts)]


def compute_aggregates(results) -> dict:
    """Report-level counts; evocation counts use each rule's first evaluation."""
    ok = [r for r in results if r.terminated is not Terminated.ERROR]
    initial = [v for r in ok for v in r.initial_verdicts.values()]
    final = [v for r in ok for v in r.verdicts.values()]
    applied = Counter(rec.step.op for r in ok for rec in r.alignment_records
                      if rec.outcome is Outcome.APPLIED)
    aborted = sum(1 for r in ok for rec in r.alignment_records if rec.outcome is Outcome.ABORTED)
    per_mlm: dict[str, dict] = {}
    for r in ok:
        for phase, verdicts in (("initial", r.initial_verdicts), ("final", r.verdicts)):
            for name, v in verdicts.items():
                row = per_mlm.setdefault(name, {"initial": {"evoked": 0, "conform": 0, "violated": 0},
                                                "final": {"evoked": 0, "conform": 0, "violated": 0}})
                row[phase]["evoked"] += 1
                row[phase]["conform" if v.conform else "violated"] += 1
    fit_final = _stats([r.fitness_final for r in ok])
    return {
        "traces": len(results),
        "errors": len(results) - len(ok),
        "evocations": len(initial),
        "failed": sum(1 for v in initial if not v.conform),
        "passed": sum(1 for v in initial if v.conform),
        "evocations_final": len(final),
        "failed_final": sum(1 for v in final if not v.conform),
        "passed_final": sum(1 for v in final if v.conform),
        "alignments": {
            "inserts": applied[Op.INSERT],
            "deletes": applied[Op.DELETE],
            "writes": applied[Op.WRITE],
            "total": sum(applied.values()),
            "aborted": aborted,
        },
        "mean_fitness": fit_final["mean"],
        "fitness_initial": _stats([r.fitness_initial for r in ok]),
        "fitness_final": fit_final,
        "terminated": {t.value: sum(1 for r in results if r.terminated is t) for t in Terminated},
        "per_mlm": {name: per_mlm[name] for name in sorted(per_mlm)},
    }


def trace_to_dict(r: TraceResult) -> dict:
    return {
        "case_id": r.case_id,
        "terminated": r.terminated.value,
        "restarts_used": r.restarts_used,
        "fitness_initial": r.fitness_initial,
        "fitness_final": r.fitness_final,
        "unevaluated_initial": r.unevaluated_initial,
        "unevaluated": r.unevaluated,
        "evoked_mlms": sorted(r.evoked_mlms),
        "initial_verdicts": _verdict_rows(r.initial_verdicts),
        "verdicts": _verdict_rows(r.verdicts),
        "alignments": [rec.to_dict() for rec in r.alignment_records],
        "notes": list(r.notes),
        "error": r.error,
    }


@dataclass(frozen=True)
class ConformanceReport:
    traces: tuple[TraceResult, ...]
    config: RunConfig

    @property
    def aggregates(self) -> dict:
        return compute_aggregates(self.traces)

    def trace(self, case_id: str) -> TraceResult:
        for r in self.traces:
            if r.case_id == case_id:
                return r
        raise KeyError(case_id)

    def to_dict(self) -> dict:
        return {"format": REPORT_FORMAT, "config": self.config.to_dict(),
                "aggregates": self.aggregates, "traces": [trace_to_dict(r) for r in self.traces]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False, allow_nan=False) + "\n"

    def to_text(self) -> str:
        return render_text(self)


def _pct(x: float | None) -> str:
    return "  n/a" if x is None else f"{x:5.3f}"


def render_text(report: ConformanceReport) -> str:
    a = report.aggregates
    al = a["alignments"]
    fi, ff = a["fitness_initial"], a["fitness_final"]
    out = [
        "Conformance summary",
        f"  traces            {a['traces']} ({a['errors']} failed to process)",
        f"  evocations        {a['evocations']}",
        f"  failed checks     {a['failed']}",
        f"  passed checks     {a['passed']}",
        f"  alignments        {al['total']} ({al['deletes']} deletes, {al['inserts']} inserts, "
        f"{al['writes']} writes; {al['aborted']} aborted)",
        f"  fitness initial   mean {fi['mean']:.3f}  min {fi['min']:.3f}  max {fi['max']:.3f}",
        f"  fitness final     mean {ff['mean']:.3f}  min {ff['min']:.3f}  max {ff['max']:.3f}",
        "",
        "Traces",
        f"  {'case':<16} {'initial':>7} {'final':>7} {'restarts':>8}  terminated",
    ]
    for r in report.traces:
        flag = " (no rule evoked)" if r.terminated is not Terminated.ERROR and r.unevaluated else ""
        out.append(f"  {r.case_id:<16} {_pct(r.fitness_initial):>7} {_pct(r.fitness_final):>7} "
                   f"{r.restarts_used:>8}  {r.terminated.value}{flag}")
        for note in r.notes:
            out.append(f"      note: {note}")
        if r.error:
            out.append(f"      error: {r.error}")
    if a["per_mlm"]:
        width = max(12, *(len(n) for n in a["per_mlm"]))
        out += ["", "Rules (first evaluation per trace: conform/evoked)",
                f"  {'mlm':<{width}} {'initial':>9} {'final':>9}"]
        for name, row in a["per_mlm"].items():
            i, f = row["initial"], row["final"]
            out.append(f"  {name:<{width}} {i['conform']:>4}/{i['evoked']:<4} "
                       f"{f['conform']:>4}/{f['evoked']:<4}")
    return "\n".join(out) + "\n"
