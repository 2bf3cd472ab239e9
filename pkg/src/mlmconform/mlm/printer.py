"""Canonical text form of a parsed rule; parsing it gives back an equal rule."""

from __future__ import annotations

from datetime import datetime

import yaml

from ..alignment import StepTemplate
from ..timestamps import format_timestamp
from .ast import format_expr
from .model import Mlm

_IND = "    "


def _slot(name: str, body: str) -> str:
    # a body ending in ';' would merge with the terminator
    sep = " " if body.endswith(";") else ""
    return f"{_IND}{name}: {body}{sep};;"


def _step(step: StepTemplate) -> dict:
    out = {
        "subject": step.subject.value,
        "op": step.op.value,
        "value": format_timestamp(step.value) if isinstance(step.value, datetime) else step.value,
        "relation": step.relation.value,
        "anchors": [format_expr(a) for a in step.anchors],
        "strategy": step.strategy.value,
    }
    if step.attribute_key is not None:
        out["attribute_key"] = step.attribute_key
    if step.activity is not None:
        out["activity"] = step.activity
    return out


def pretty_print(mlm: Mlm) -> str:
    lines = ["maintenance:"]
    lines += [_slot(k, v) for k, v in mlm.maintenance.items()]
    lines.append("library:")
    lines += [_slot(k, v) for k, v in mlm.library.items()]
    lines.append("knowledge:")
    if mlm.data:
        stmts = ";\n".join(f"{_IND * 2}{b.name} := {b.query}" for b in mlm.data)
        lines.append(f"{_IND}data:\n{stmts}\n{_IND};;")
    lines.append(_slot("evoke", " or ".join(mlm.evoke)))
    lines.append(_slot("logic", format_expr(mlm.logic)))
    doc = {}
    if mlm.action.conclude_conform:
        doc["conform"] = dict(mlm.action.conclude_conform)
    if mlm.action.on_violation:
        doc["violation"] = [_step(s) for s in mlm.action.on_violation]
    if doc:
        body = yaml.safe_dump(doc, sort_keys=False, default_flow_style=False, allow_unicode=True)
        indented = "\n".join(_IND * 2 + line for line in body.rstrip("\n").split("\n"))
        lines.append(f"{_IND}action:\n{indented}\n{_IND};;")
    else:
        lines.append(f"{_IND}action: ;;")
    lines.append("end:")
    return "\n".join(lines) + "\n"
