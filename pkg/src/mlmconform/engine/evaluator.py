"""Compile rule expressions to Python closures and run them.

Null (an empty ``first``/``last`` selection) behaves as false in boolean
positions, makes every comparison false, makes ``exists`` false and
propagates through arithmetic. Temporal filters over a list drop
elements rather than yield null.
"""

from __future__ import annotations

import operator
from collections.abc import Callable, Mapping
from datetime import datetime, timedelta

from ..eventlog.model import Event, Trace
from ..eventlog.query import binding_value, query_trace
from ..mlm.ast import Binary, Duration, Expr, ListLit, Literal, Temporal, Unary, Var
from ..mlm.model import Binding

Compiled = Callable[[Mapping], object]


class EvaluationError(Exception):
    """A run-time failure inside a rule (type clash, division by zero, ...)."""


class TraceEnv(Mapping):
    """Variables of one evaluation, each query run on first access."""

    def __init__(self, bindings: tuple[Binding, ...], trace: Trace):
        self._bindings = {b.name: b for b in bindings}
        self._trace = trace
        self._cache: dict[str, object] = {}

    def __getitem__(self, name: str):
        if name not in self._cache:
            binding = self._bindings[name]
            self._cache[name] = binding_value(binding.query, query_trace(self._trace, binding.query))
        return self._cache[name]

    def __iter__(self):
        return iter(self._bindings)

    def __len__(self) -> int:
        return len(self._bindings)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _family(v) -> str:
    if _is_num(v):
        return "number"
    for t, name in ((bool, "boolean"), (str, "string"), (datetime, "timestamp"),
                    (timedelta, "duration"), (Event, "event"), (list, "list")):
        if isinstance(v, t):
            return name
    return type(v).__name__


def _truth(v, what: str) -> bool:
    if v is None or v is False:
        return False
    if v is True:
        return True
    raise EvaluationError(f"{what} expects a boolean, got {_family(v)}")


_ORDER = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}


def compare(op: str, a, b) -> bool:
    if a is None or b is None:
        return False
    fa, fb = _family(a), _family(b)
    if op in ("=", "!="):
        same = fa == fb and a == b
        return same if op == "=" else (not same)
    if fa != fb:
        raise EvaluationError(f"cannot order {fa} against {fb}")
    if fa not in ("number", "string", "timestamp", "duration"):
        raise EvaluationError(f"{fa} values have no order")
    return _ORDER[op](a, b)


def arith(op: str, a, b):
    if a is None or b is None:
        return None
    fa, fb = _family(a), _family(b)
    try:
        if fa == "number" and fb == "number":
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if b == 0:
                raise EvaluationError("division by zero")
            return a / b
        pair = (fa, fb)
        if op == "+" and pair in (("timestamp", "duration"), ("duration", "timestamp"),
                                  ("duration", "duration")):
            return a + b
        if op == "-" and pair in (("timestamp", "duration"), ("timestamp", "timestamp"),
                                  ("duration", "duration")):
            return a - b
        if op == "*" and pair in (("duration", "number"), ("number", "duration")):
            return a * b
        if op == "/" and pair in (("duration", "number"), ("duration", "duration")):
            if not b:
                raise EvaluationError("division by zero")
            return a / b
    except OverflowError as exc:
        raise EvaluationError(f"timestamp arithmetic overflow: {exc}") from None
    raise EvaluationError(f"operator '{op}' cannot combine {fa} and {fb}")


def temporal(op: str, left, right):
    if isinstance(left, timedelta):
        if op == "same_day":
            raise EvaluationError("'within same day' needs timestamps")
        if right is None:
            return None
        if not isinstance(right, datetime):
            raise EvaluationError(f"'{op}' needs a timestamp on the right, got {_family(right)}")
        try:
            return right - left if op == "before" else right + left
        except OverflowError as exc:
            raise EvaluationError(f"timestamp arithmetic overflow: {exc}") from None
    if right is not None and not isinstance(right, datetime):
        raise EvaluationError(f"'{op}' needs a timestamp on the right, got {_family(right)}")
    if isinstance(left, list):
        if right is None:
            return []
        for item in left:
            if not isinstance(item, datetime):
                raise EvaluationError(f"'{op}' filters timestamps, found {_family(item)}")
        return [t for t in left if _temporal_holds(op, t, right)]
    if left is None or right is None:
        return False
    if not isinstance(left, datetime):
        raise EvaluationError(f"'{op}' needs a timestamp on the left, got {_family(left)}")
    return _temporal_holds(op, left, right)


def _temporal_holds(op: str, t: datetime, ref: datetime) -> bool:
    if op == "before":
        return t < ref
    if op == "after":
        return t > ref
    return t.date() == ref.date()


def unary(op: str, v):
    if op == "not":
        return not _truth(v, "'not'")
    if op == "exists":
        return bool(v) if isinstance(v, list) else v is not None
    if v is None:
        return 0 if op == "count" else None
    if op == "neg":
        if _is_num(v) or isinstance(v, timedelta):
            return -v
        raise EvaluationError(f"cannot negate {_family(v)}")
    if op in ("count", "first", "last"):
        if not isinstance(v, list):
            raise EvaluationError(f"'{op}' needs a list, got {_family(v)}")
        if op == "count":
            return len(v)
        if not v:
            return None
        return v[0] if op == "first" else v[-1]
    if op == "time_of":
        if isinstance(v, Event):
            return v.timestamp
        if isinstance(v, list) and all(isinstance(e, Event) for e in v):
            return [e.timestamp for e in v]
        raise EvaluationError(f"'time of' needs events, got {_family(v)}")
    raise EvaluationError(f"unknown operator {op!r}")


def compile_expr(expr: Expr) -> Compiled:
    """Turn an expression tree into a function of the variable environment."""
    if isinstance(expr, Literal):
        value = expr.value
        return lambda env: value
    if isinstance(expr, Duration):
        value = timedelta(seconds=expr.seconds)
        return lambda env: value
    if isinstance(expr, Var):
        name = expr.name
        return lambda env: env[name]
    if isinstance(expr, ListLit):
        items = [compile_expr(i) for i in expr.items]
        return lambda env: [f(env) for f in items]
    if isinstance(expr, Unary):
        inner = compile_expr(expr.operand)
        op = expr.op
        return lambda env: unary(op, inner(env))
    if isinstance(expr, Temporal):
        left, right = compile_expr(expr.left), compile_expr(expr.right)
        op = expr.op
        return lambda env: temporal(op, left(env), right(env))
    if isinstance(expr, Binary):
        left, right = compile_expr(expr.left), compile_expr(expr.right)
        op = expr.op
        if op == "and":
            return lambda env: _truth(left(env), "'and'") and _truth(right(env), "'and'")
        if op == "or":
            return lambda env: _truth(left(env), "'or'") or _truth(right(env), "'or'")
        if op in ("=", "!=", "<", "<=", ">", ">="):
            return lambda env: compare(op, left(env), right(env))
        return lambda env: arith(op, left(env), right(env))
    raise TypeError(f"not an expression node: {expr!r}")
