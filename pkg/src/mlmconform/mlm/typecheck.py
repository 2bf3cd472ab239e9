"""Static types for rule expressions.

Types are plain strings: ``boolean``, ``integer``, ``decimal``, ``string``,
``timestamp``, ``duration``, ``event``, ``any`` and ``list[<T>]``. ``any``
comes from attribute queries whose value type is only known at run time; it
is accepted wherever a concrete type is and checked again when evaluated.
"""

from __future__ import annotations

from datetime import datetime

from .ast import Binary, Duration, Expr, ListLit, Literal, Temporal, Unary, Var
from .errors import MlmError

NUMERIC = ("integer", "decimal")
ORDERED = ("integer", "decimal", "string", "timestamp", "duration")


def list_of(t: str) -> str:
    return f"list[{t}]"


def element_of(t: str) -> str | None:
    if t.startswith("list[") and t.endswith("]"):
        return t[5:-1]
    return None


def literal_type(value) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "decimal"
    if isinstance(value, datetime):
        return "timestamp"
    if isinstance(value, str):
        return "string"
    raise TypeError(f"unsupported literal {value!r}")


def _family(t: str) -> str:
    return "number" if t in NUMERIC else t


def _unify(a: str, b: str) -> str | None:
    if a == b:
        return a
    if a == "any" or b == "any":
        return "any"
    if a in NUMERIC and b in NUMERIC:
        return "decimal"
    ea, eb = element_of(a), element_of(b)
    if ea and eb:
        inner = _unify(ea, eb)
        return list_of(inner) if inner else None
    return None


class _Checker:
    def __init__(self, env: dict[str, str]):
        self.env = env

    def fail(self, node: Expr, path: list[str], message: str, code: str = "TYPE_ERROR"):
        where = "/".join(path) or "<root>"
        raise MlmError(code, f"{message} (at {where})", offset=getattr(node, "offset", None),
                       node=where)

    def check(self, node: Expr, path: list[str]) -> str:
        if isinstance(node, Literal):
            return literal_type(node.value)
        if isinstance(node, Duration):
            return "duration"
        if isinstance(node, Var):
            if node.name not in self.env:
                self.fail(node, path, f"undeclared variable {node.name!r}", "UNDECLARED_VARIABLE")
            return self.env[node.name]
        if isinstance(node, ListLit):
            result = None
            for i, item in enumerate(node.items):
                t = self.check(item, path + [f"list[{i}]"])
                result = t if result is None else _unify(result, t)
                if result is None:
                    self.fail(item, path, "list items have incompatible types")
            return list_of(result or "any")
        if isinstance(node, Unary):
            return self.unary(node, path)
        if isinstance(node, Binary):
            return self.binary(node, path)
        if isinstance(node, Temporal):
            return self.temporal(node, path)
        self.fail(node, path, f"unknown node {type(node).__name__}")

    def unary(self, node: Unary, path: list[str]) -> str:
        t = self.check(node.operand, path + [node.op])
        op = node.op
        if op == "exists":
            return "boolean"
        if t == "any":
            return "integer" if op == "count" else ("boolean" if op == "not" else "any")
        if op == "not" and t == "boolean":
            return "boolean"
        if op == "neg" and t in ("integer", "decimal", "duration"):
            return t
        elem = element_of(t)
        if op == "count" and elem:
            return "integer"
        if op in ("first", "last") and elem:
            return elem
        if op == "time_of":
            if t == "event":
                return "timestamp"
            if elem in ("event", "any"):
                return list_of("timestamp")
        self.fail(node, path, f"'{op}' cannot take a {t}")

    def binary(self, node: Binary, path: list[str]) -> str:
        lt = self.check(node.left, path + [f"{node.op}.left"])
        rt = self.check(node.right, path + [f"{node.op}.right"])
        op = node.op
        if op in ("and", "or"):
            if lt in ("boolean", "any") and rt in ("boolean", "any"):
                return "boolean"
        elif op in ("=", "!="):
            if lt == "any" or rt == "any" or _family(lt) == _family(rt):
                if not (element_of(lt) or element_of(rt)):
                    return "boolean"
        elif op in ("<", "<=", ">", ">="):
            if (lt == "any" and rt in ORDERED + ("any",)) or (rt == "any" and lt in ORDERED):
                return "boolean"
            if lt in ORDERED and _family(lt) == _family(rt):
                return "boolean"
        else:
            result = self.arith(op, lt, rt)
            if result:
                return result
        self.fail(node, path, f"operator '{op}' cannot combine {lt} and {rt}")

    @staticmethod
    def arith(op: str, lt: str, rt: str) -> str | None:
        if lt in NUMERIC and rt in NUMERIC:
            if op == "/" or "decimal" in (lt, rt):
                return "decimal"
            return "integer"
        pair = (lt, rt)
        table = {
            "+": {("timestamp", "duration"): "timestamp", ("duration", "timestamp"): "timestamp",
                  ("duration", "duration"): "duration"},
            "-": {("timestamp", "duration"): "timestamp", ("timestamp", "timestamp"): "duration",
                  ("duration", "duration"): "duration"},
            "*": {("duration", "integer"): "duration", ("duration", "decimal"): "duration",
                  ("integer", "duration"): "duration", ("decimal", "duration"): "duration"},
            "/": {("duration", "integer"): "duration", ("duration", "decimal"): "duration",
                  ("duration", "duration"): "decimal"},
        }[op]
        if pair in table:
            return table[pair]
        if "any" in pair:
            other = rt if lt == "any" else lt
            if other in NUMERIC + ("timestamp", "duration", "any"):
                return "any"
        return None

    def temporal(self, node: Temporal, path: list[str]) -> str:
        lt = self.check(node.left, path + [f"{node.op}.left"])
        rt = self.check(node.right, path + [f"{node.op}.right"])
        if rt not in ("timestamp", "any"):
            self.fail(node, path, f"'{node.op}' needs a timestamp on the right, got {rt}")
        if lt == "timestamp":
            return "boolean"
        if lt == "list[timestamp]":
            return lt
        if lt == "duration" and node.op != "same_day":
            return "timestamp"
        if lt == "any" or lt == "list[any]":
            return "any"
        self.fail(node, path, f"'{node.op}' needs a timestamp on the left, got {lt}")


def typecheck(expr: Expr, env: dict[str, str]) -> str:
    """Return the static type of ``expr``; raises :class:`MlmError` (TYPE_ERROR)."""
    return _Checker(env).check(expr, [])
