from .core import (
    CompiledMlm,
    Registry,
    Verdict,
    build_registry,
    compile_mlm,
    eval_logic,
    evoke,
    evoke_all,
    first_evocations,
    run_rule,
)
from .evaluator import EvaluationError, TraceEnv, compile_expr

__all__ = [
    "CompiledMlm", "EvaluationError", "Registry", "TraceEnv", "Verdict", "build_registry",
    "compile_expr", "compile_mlm", "eval_logic", "evoke", "evoke_all", "first_evocations", "run_rule",
]
