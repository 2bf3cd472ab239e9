from __future__ import annotations

import sys
from datetime import datetime, timezone
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from mlmconform.eventlog import Event, Trace
from mlmconform.mlm import load_bundle, read_model_dir

ROOT = Path(__file__).resolve().parent.parent
DEMO = ROOT / "demo"
sys.path.insert(0, str(Path(__file__).resolve().parent))

settings.register_profile("default", max_examples=150, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# filled by test_acceptance, printed once at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def ts(text: str) -> datetime:
    return datetime.fromisoformat(text).replace(tzinfo=timezone.utc)


def make_trace(*spec, case_id: str = "t") -> Trace:
    """make_trace(("A", "2022-01-01T10:00"), ("B", "2022-01-01T11:00", {"x": 1}))"""
    from mlmconform.eventlog import Attribute

    events = []
    for item in spec:
        activity, when, *rest = item
        attrs = tuple(Attribute(k, v) for k, v in (rest[0] if rest else {}).items())
        events.append(Event(activity, ts(when), attrs))
    return Trace(case_id, tuple(events))


def load_model(path: Path):
    mlms, diagnostics = load_bundle(read_model_dir(path))
    assert not [d for d in diagnostics if d["severity"] == "error"], diagnostics
    return mlms


@pytest.fixture(scope="session")
def demo_model():
    return load_model(DEMO / "model")


@pytest.fixture(scope="session")
def demo_log():
    from mlmconform.eventlog import parse_xes

    return parse_xes((DEMO / "corpus" / "golden.xes").read_bytes())


@pytest.fixture(scope="session")
def followed_by_mlm():
    from mlmconform.mlm import parse_mlm

    return parse_mlm((DEMO / "followed_by" / "b_followed_by_c.mlm").read_text())


@pytest.fixture
def abd_trace():
    return make_trace(("A", "2022-06-01T10:00"), ("B", "2022-06-01T10:01"),
                      ("D", "2022-06-01T10:02"), case_id="abd")
