"""Expression AST for the logic slot and alignment anchors."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..eventlog.query import format_literal

UNITS = {
    "second": 1, "seconds": 1,
    "minute": 60, "minutes": 60,
    "hour": 3600, "hours": 3600,
    "day": 86400, "days": 86400,
    "week": 604800, "weeks": 604800,
}


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Literal(Expr):
    value: object
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Duration(Expr):
    amount: int
    unit: str
    offset: int = field(default=0, compare=False)

    @property
    def seconds(self) -> int:
        return self.amount * UNITS[self.unit]


@dataclass(frozen=True)
class ListLit(Expr):
    items: tuple[Expr, ...]
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var(Expr):
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # not, neg, exists, count, first, last, time_of
    operand: Expr
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # and, or, + - * /, = != < <= > >=
    left: Expr
    right: Expr
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Temporal(Expr):
    op: str  # before, after, same_day
    left: Expr
    right: Expr
    offset: int = field(default=0, compare=False)


def children(expr: Expr) -> tuple[Expr, ...]:
    if isinstance(expr, ListLit):
        return expr.items
    if isinstance(expr, Unary):
        return (expr.operand,)
    if isinstance(expr, (Binary, Temporal)):
        return (expr.left, expr.right)
    return ()


def free_variables(expr: Expr) -> list[Var]:
    out = []
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.append(node)
        stack.extend(reversed(children(node)))
    return out


_PREFIX_WORDS = {"not": "not", "neg": "-", "exists": "exists", "count": "count",
                 "first": "first", "last": "last", "time_of": "time of"}


def format_expr(expr: Expr) -> str:
    """Render ``expr`` as source text; compound operands are parenthesized."""

    def sub(node: Expr) -> str:
        text = format_expr(node)
        if isinstance(node, (Unary, Binary, Temporal)) or (
            isinstance(node, Literal) and isinstance(node.value, (int, float))
            and not isinstance(node.value, bool) and node.value < 0
        ):
            return f"({text})"
        return text

    if isinstance(expr, Literal):
        v = expr.value
        if isinstance(v, (int, float)) and not isinstance(v, bool) and v < 0:
            return f"-{format_literal(-v)}"
        return format_literal(v)
    if isinstance(expr, Duration):
        return f"{expr.amount} {expr.unit}"
    if isinstance(expr, ListLit):
        return "[" + ", ".join(format_expr(i) for i in expr.items) + "]"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Unary):
        word = _PREFIX_WORDS[expr.op]
        sep = "" if expr.op == "neg" else " "
        return f"{word}{sep}{sub(expr.operand)}"
    if isinstance(expr, Binary):
        return f"{sub(expr.left)} {expr.op} {sub(expr.right)}"
    if isinstance(expr, Temporal):
        word = "within same day as" if expr.op == "same_day" else expr.op
        return f"{sub(expr.left)} {word} {sub(expr.right)}"
    raise TypeError(f"not an expression node: {expr!r}")
