from __future__ import annotations

from dataclasses import dataclass, field

from ..alignment import StepTemplate
from ..eventlog.query import TraceQuery, binding_type
from .ast import Expr

MAINTENANCE_REQUIRED = ("title", "mlmname", "version", "author", "date")
LIBRARY_REQUIRED = ("purpose",)
LIBRARY_OPTIONAL = ("keywords", "citations")


@dataclass(frozen=True)
class Binding:
    name: str
    query: TraceQuery


@dataclass(frozen=True)
class ActionSpec:
    conclude_conform: dict = field(default_factory=dict)
    on_violation: tuple[StepTemplate, ...] = ()


@dataclass(frozen=True)
class Mlm:
    maintenance: dict
    library: dict
    data: tuple[Binding, ...]
    evoke: tuple[str, ...]
    logic: Expr
    action: ActionSpec = field(default_factory=ActionSpec)

    @property
    def name(self) -> str:
        return self.maintenance["mlmname"]

    @property
    def env(self) -> dict[str, str]:
        return {b.name: binding_type(b.query) for b in self.data}

    def describing_metadata(self) -> dict:
        """What a conforming evaluation reports: maintenance and library slots."""
        meta = {"maintenance": dict(self.maintenance), "library": dict(self.library)}
        if self.action.conclude_conform:
            meta["conform"] = dict(self.action.conclude_conform)
        return meta
