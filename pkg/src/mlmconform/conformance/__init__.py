from .check import (
    PassEvaluator,
    RunConfig,
    Terminated,
    TraceResult,
    check_log,
    check_trace,
    fitness,
    trace_rng,
)
from .report import REPORT_FORMAT, ConformanceReport, compute_aggregates, render_text

__all__ = [
    "REPORT_FORMAT", "ConformanceReport", "PassEvaluator", "RunConfig", "Terminated", "TraceResult",
    "check_log", "check_trace", "compute_aggregates", "fitness", "render_text", "trace_rng",
]
