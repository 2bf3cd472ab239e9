from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..alignment import Op, Relation
from .ast import format_expr
from .model import Mlm


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" blocks loading, "warning" does not
    code: str
    mlm: str
    message: str

    @property
    def fatal(self) -> bool:
        return self.severity == "error"

    def to_dict(self) -> dict:
        return {"severity": self.severity, "code": self.code, "mlm": self.mlm, "message": self.message}


def validate_model(mlms: Iterable[Mlm]) -> list[Diagnostic]:
    """Cross-rule checks that a single file cannot catch."""
    mlms = list(mlms)
    out: list[Diagnostic] = []
    seen: dict[str, int] = {}
    for m in mlms:
        seen[m.name] = seen.get(m.name, 0) + 1
    for name, n in sorted(seen.items()):
        if n > 1:
            out.append(Diagnostic("error", "DUPLICATE_MLMNAME", name, f"mlmname used by {n} rules"))

    by_shape: dict[tuple, list[str]] = {}
    for m in mlms:
        key = (frozenset(m.evoke), format_expr(m.logic), tuple(str(b.query) for b in m.data))
        by_shape.setdefault(key, []).append(m.name)
    for names in by_shape.values():
        if len(names) > 1:
            for name in names:
                others = ", ".join(n for n in names if n != name) or name
                out.append(Diagnostic("warning", "DUPLICATE_EVOCATION", name,
                                      f"same evoke events and logic as {others}"))

    for m in mlms:
        for i, step in enumerate(m.action.on_violation, 1):
            if not step.legal:
                out.append(Diagnostic("error", "ILLEGAL_STEP", m.name,
                                      f"step {i}: {step.op.value} is not defined for {step.subject.value}"))
            elif step.op in (Op.DELETE, Op.WRITE) and step.relation is not Relation.AT:
                out.append(Diagnostic("error", "ILLEGAL_STEP", m.name,
                                      f"step {i}: {step.op.value} needs relation AT"))
    return out


def has_fatal(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.fatal for d in diagnostics)
