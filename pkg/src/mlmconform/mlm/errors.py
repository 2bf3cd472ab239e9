from __future__ import annotations


class MlmError(Exception):
    """A rule-file failure.

    ``code`` is MISSING_SLOT, SYNTAX_ERROR, TYPE_ERROR or UNDECLARED_VARIABLE.
    ``line``/``column`` are filled in once the error is placed in a file.
    """

    def __init__(self, code: str, message: str, *, offset: int | None = None,
                 slot: str | None = None, node: str | None = None,
                 line: int | None = None, column: int | None = None):
        self.code = code
        self.message = message
        self.offset = offset
        self.slot = slot
        self.node = node
        self.line = line
        self.column = column
        super().__init__(self._render())

    def _render(self) -> str:
        where = f" at {self.line}:{self.column}" if self.line is not None else ""
        slot = f" in slot '{self.slot}'" if self.slot else ""
        return f"{self.code}{where}{slot}: {self.message}"

    def placed(self, line: int, column: int, slot: str | None = None) -> MlmError:
        return MlmError(self.code, self.message, offset=self.offset, slot=slot or self.slot,
                        node=self.node, line=line, column=column)

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "slot": self.slot,
                "line": self.line, "column": self.column}
