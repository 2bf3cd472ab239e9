"""Tokenizer shared by the trace-query and rule-expression languages."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .timestamps import parse_timestamp


class ParseError(Exception):
    """A positioned parse failure; ``offset`` indexes the source text."""

    def __init__(self, code: str, message: str, offset: int, source: str = ""):
        self.code = code
        self.message = message
        self.offset = offset
        self.line, self.column = line_col(source, offset)
        super().__init__(f"{code} at {self.line}:{self.column}: {message}")


def line_col(source: str, offset: int) -> tuple[int, int]:
    offset = max(0, min(offset, len(source)))
    line = source.count("\n", 0, offset) + 1
    col = offset - (source.rfind("\n", 0, offset) + 1) + 1
    return line, col


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER, STRING, TIMESTAMP, IDENT, OP, EOF
    text: str
    value: object
    offset: int

    def is_op(self, *ops: str) -> bool:
        return self.kind == "OP" and self.text in ops

    def is_word(self, *words: str) -> bool:
        return self.kind == "IDENT" and self.text in words


_SPEC = [
    ("WS", r"[ \t\r\n]+"),
    ("COMMENT", r"//[^\n]*"),
    ("TIMESTAMP", r"\d{4}-\d{2}-\d{2}(?:T\d{2}:\d{2}(?::\d{2}(?:\.\d+)?)?)?(?:Z|[+-]\d{2}:\d{2})?(?![\w.])"),
    ("NUMBER", r"\d+(?:\.\d+)?(?![\w.])"),
    ("STRING", r'"(?:[^"\\\n]|\\.)*"'),
    ("IDENT", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("OP", r":=|!=|<>|<=|>=|[=<>+\-*/()\[\],;]"),
]
_MASTER = re.compile("|".join(f"(?P<{name}>{pat})" for name, pat in _SPEC))
# string literals use JSON escapes, so printing with json.dumps round-trips
_STRING_DECODER = json.JSONDecoder(strict=False)


def _unescape(literal: str, offset: int, source: str) -> str:
    try:
        return _STRING_DECODER.decode(literal)
    except ValueError as exc:
        pos = getattr(exc, "pos", 0)
        raise ParseError("SYNTAX_ERROR", f"invalid string escape: {getattr(exc, 'msg', exc)}",
                         offset + pos, source) from None


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _MASTER.match(source, pos)
        if m is None:
            raise ParseError("SYNTAX_ERROR", f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        text = m.group()
        if kind == "NUMBER":
            value = float(text) if "." in text else int(text)
            tokens.append(Token(kind, text, value, pos))
        elif kind == "TIMESTAMP":
            try:
                value = parse_timestamp(text)
            except (ValueError, OverflowError):
                raise ParseError("SYNTAX_ERROR", f"invalid timestamp {text}", pos, source) from None
            tokens.append(Token(kind, text, value, pos))
        elif kind == "STRING":
            tokens.append(Token(kind, text, _unescape(text, pos, source), pos))
        elif kind in ("IDENT", "OP"):
            tokens.append(Token(kind, text, text, pos))
        pos = m.end()
    tokens.append(Token("EOF", "", None, n))
    return tokens


class TokenStream:
    """Cursor over a token list with expectation helpers."""

    def __init__(self, source: str, tokens: list[Token] | None = None):
        self.source = source
        self.tokens = tokens if tokens is not None else tokenize(source)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, ahead: int = 1) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, expected: str, code: str = "SYNTAX_ERROR") -> ParseError:
        tok = self.current
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        return ParseError(code, f"expected {expected}, found {found}", tok.offset, self.source)

    def accept_op(self, *ops: str) -> Token | None:
        if self.current.is_op(*ops):
            return self.advance()
        return None

    def accept_word(self, *words: str) -> Token | None:
        if self.current.is_word(*words):
            return self.advance()
        return None

    def expect_op(self, op: str) -> Token:
        tok = self.accept_op(op)
        if tok is None:
            raise self.error(f"'{op}'")
        return tok

    def expect_word(self, word: str) -> Token:
        tok = self.accept_word(word)
        if tok is None:
            raise self.error(f"'{word}'")
        return tok

    def expect_end(self) -> None:
        if self.current.kind != "EOF":
            raise self.error("end of input")
