"""Recount a conformance report's aggregates from its per-trace rows.

Usage: python scripts/recount_report.py report.json
Exits 1 and lists the differing fields when the stored aggregates disagree.
"""

from __future__ import annotations

import json
import sys
from statistics import fmean


def _stats(xs):
    return {"mean": fmean(xs), "min": min(xs), "max": max(xs)} if xs else {"mean": 0.0, "min": 0.0, "max": 0.0}


def recount(report: dict) -> dict:
    rows = report["traces"]
    ok = [t for t in rows if t["terminated"] != "ERROR"]
    initial = [v for t in ok for v in t["initial_verdicts"]]
    final = [v for t in ok for v in t["verdicts"]]
    applied = [a["step"]["op"] for t in ok for a in t["alignments"] if a["outcome"] == "APPLIED"]
    per_mlm = {}
    for t in ok:
        for phase in ("initial", "final"):
            for v in t["initial_verdicts" if phase == "initial" else "verdicts"]:
                row = per_mlm.setdefault(v["mlm"], {p: {"evoked": 0, "conform": 0, "violated": 0}
                                                    for p in ("initial", "final")})
                row[phase]["evoked"] += 1
                row[phase]["conform" if v["conform"] else "violated"] += 1
    final_fit = _stats([t["fitness_final"] for t in ok])
    return {
        "traces": len(rows),
        "errors": len(rows) - len(ok),
        "evocations": len(initial),
        "failed": sum(not v["conform"] for v in initial),
        "passed": sum(v["conform"] for v in initial),
        "evocations_final": len(final),
        "failed_final": sum(not v["conform"] for v in final),
        "passed_final": sum(v["conform"] for v in final),
        "alignments": {
            "inserts": applied.count("INSERT"),
            "deletes": applied.count("DELETE"),
            "writes": applied.count("WRITE"),
            "total": len(applied),
            "aborted": sum(a["outcome"] == "ABORTED" for t in ok for a in t["alignments"]),
        },
        "mean_fitness": final_fit["mean"],
        "fitness_initial": _stats([t["fitness_initial"] for t in ok]),
        "fitness_final": final_fit,
        "terminated": {k: sum(t["terminated"] == k for t in rows)
                       for k in ("STABLE", "ABORTED", "RESTART_LIMIT", "ERROR")},
        "per_mlm": dict(sorted(per_mlm.items())),
    }


def differences(report: dict, tol: float = 1e-12) -> list[str]:
    want, have = recount(report), report["aggregates"]
    out = []

    def walk(a, b, path):
        if isinstance(a, dict) and isinstance(b, dict):
            for k in sorted(set(a) | set(b)):
                if k not in a or k not in b:
                    out.append(f"{path}{k}: missing")
                else:
                    walk(a[k], b[k], f"{path}{k}.")
        elif isinstance(a, float) or isinstance(b, float):
            if abs(a - b) > tol:
                out.append(f"{path[:-1]}: {b} != {a}")
        elif a != b:
            out.append(f"{path[:-1]}: {b} != {a}")

    walk(want, have, "")
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    with open(argv[0], encoding="utf-8") as fh:
        diffs = differences(json.load(fh))
    for d in diffs:
        print(d)
    return 1 if diffs else 0


if __name__ == "__main__":
    sys.exit(main())
