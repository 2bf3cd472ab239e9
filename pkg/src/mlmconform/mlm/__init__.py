from .ast import format_expr
from .bundle import format_diagnostic, load_bundle, read_model_dir
from .errors import MlmError
from .exprparser import parse_expr
from .model import ActionSpec, Binding, Mlm
from .parser import parse_mlm
from .printer import pretty_print
from .typecheck import typecheck
from .validate import Diagnostic, has_fatal, validate_model

__all__ = [
    "ActionSpec", "Binding", "format_diagnostic", "load_bundle", "read_model_dir", "Diagnostic", "Mlm", "MlmError", "format_expr", "has_fatal",
    "parse_expr", "parse_mlm", "pretty_print", "typecheck", "validate_model",
]
