"""Recursive-descent parser for rule expressions.

Precedence, loosest first::

    or  <  and  <  not  <  = != < <= > >=  <  before/after/within same day
        <  + -  <  * /  <  prefix (- exists count first last time of)

``before``/``after`` associate to the right so that
``x after 3 days before t`` reads as ``x after (3 days before t)``.
"""

from __future__ import annotations

from ..lexer import ParseError, TokenStream
from .ast import UNITS, Binary, Duration, Expr, ListLit, Literal, Temporal, Unary, Var, children

MAX_DEPTH = 64
COMPARISONS = ("=", "!=", "<>", "<", "<=", ">", ">=")
KEYWORDS = frozenset({
    "and", "or", "not", "exists", "count", "first", "last", "time", "of",
    "before", "after", "within", "same", "as", "true", "false", "where",
    "events", "attribute", "timestamps", "all",
}) | frozenset(UNITS)


def tree_height(expr: Expr) -> int:
    """Height of an expression tree, computed without recursion."""
    best = 0
    stack = [(expr, 1)]
    while stack:
        node, h = stack.pop()
        best = max(best, h)
        stack.extend((c, h + 1) for c in children(node))
    return best


class ExprParser:
    def __init__(self, ts: TokenStream):
        self.ts = ts
        self.depth = 0

    def _enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError("SYNTAX_ERROR", "expression nested too deeply",
                             self.ts.current.offset, self.ts.source)

    def _link(self, left: Expr) -> None:
        # left-associative chains deepen the tree without recursing here
        if tree_height(left) >= MAX_DEPTH:
            raise ParseError("SYNTAX_ERROR", "expression nested too deeply",
                             self.ts.current.offset, self.ts.source)

    def parse(self) -> Expr:
        start = self.ts.current.offset
        self._enter()
        try:
            expr = self.or_expr()
        finally:
            self.depth -= 1
        if self.depth == 0 and tree_height(expr) > MAX_DEPTH:
            # long operator chains nest without passing through _enter
            raise ParseError("SYNTAX_ERROR", "expression nested too deeply", start, self.ts.source)
        return expr

    def or_expr(self) -> Expr:
        left = self.and_expr()
        while tok := self.ts.accept_word("or"):
            self._link(left)
            left = Binary("or", left, self.and_expr(), tok.offset)
        return left

    def and_expr(self) -> Expr:
        left = self.not_expr()
        while tok := self.ts.accept_word("and"):
            self._link(left)
            left = Binary("and", left, self.not_expr(), tok.offset)
        return left

    def not_expr(self) -> Expr:
        if tok := self.ts.accept_word("not"):
            self._enter()
            try:
                return Unary("not", self.not_expr(), tok.offset)
            finally:
                self.depth -= 1
        return self.cmp_expr()

    def cmp_expr(self) -> Expr:
        left = self.temporal()
        tok = self.ts.accept_op(*COMPARISONS)
        if tok is None:
            return left
        op = "!=" if tok.text == "<>" else tok.text
        return Binary(op, left, self.temporal(), tok.offset)

    def temporal(self) -> Expr:
        left = self.add_expr()
        if tok := self.ts.accept_word("before", "after"):
            self._enter()
            try:
                return Temporal(tok.text, left, self.temporal(), tok.offset)
            finally:
                self.depth -= 1
        if tok := self.ts.accept_word("within"):
            self.ts.expect_word("same")
            self.ts.expect_word("day")
            self.ts.accept_word("as")
            return Temporal("same_day", left, self.add_expr(), tok.offset)
        return left

    def add_expr(self) -> Expr:
        left = self.mul_expr()
        while tok := self.ts.accept_op("+", "-"):
            self._link(left)
            left = Binary(tok.text, left, self.mul_expr(), tok.offset)
        return left

    def mul_expr(self) -> Expr:
        left = self.prefix()
        while tok := self.ts.accept_op("*", "/"):
            self._link(left)
            left = Binary(tok.text, left, self.prefix(), tok.offset)
        return left

    def prefix(self) -> Expr:
        ts = self.ts
        tok = ts.current
        op = None
        if tok.is_op("-"):
            op = "neg"
        elif tok.is_word("exists", "count", "first", "last"):
            op = tok.text
        elif tok.is_word("time") and ts.peek().is_word("of"):
            ts.advance()
            op = "time_of"
        if op is None:
            return self.postfix()
        ts.advance()
        self._enter()
        try:
            return Unary(op, self.prefix(), tok.offset)
        finally:
            self.depth -= 1

    def postfix(self) -> Expr:
        ts = self.ts
        tok = ts.current
        if tok.kind == "NUMBER" and ts.peek().kind == "IDENT" and ts.peek().text in UNITS:
            if not isinstance(tok.value, int):
                raise ParseError("SYNTAX_ERROR", "duration amount must be a whole number",
                                 tok.offset, ts.source)
            ts.advance()
            return Duration(tok.value, ts.advance().text, tok.offset)
        return self.primary()

    def primary(self) -> Expr:
        ts = self.ts
        tok = ts.current
        if tok.kind in ("NUMBER", "STRING", "TIMESTAMP"):
            ts.advance()
            return Literal(tok.value, tok.offset)
        if tok.is_word("true", "false"):
            ts.advance()
            return Literal(tok.text == "true", tok.offset)
        if tok.kind == "IDENT" and tok.text not in KEYWORDS:
            ts.advance()
            return Var(tok.text, tok.offset)
        if tok.is_op("("):
            ts.advance()
            inner = self.parse()
            ts.expect_op(")")
            return inner
        if tok.is_op("["):
            ts.advance()
            items = []
            if not ts.accept_op("]"):
                items.append(self.parse())
                while ts.accept_op(","):
                    items.append(self.parse())
                ts.expect_op("]")
            return ListLit(tuple(items), tok.offset)
        raise ts.error("an expression")


def parse_expr(source: str) -> Expr:
    """Parse a complete expression; raises :class:`ParseError`."""
    ts = TokenStream(source)
    expr = ExprParser(ts).parse()
    ts.expect_end()
    return expr
