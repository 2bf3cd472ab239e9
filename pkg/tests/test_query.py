import random
from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_trace
from generators import random_trace
from mlmconform.eventlog import EventLogError, parse_query, query_trace
from mlmconform.eventlog.query import Filter, TraceQuery, binding_type
from oracles import oracle_query


def test_parse_and_print():
    q = parse_query('first timestamps where activity = "B" where x >= 2')
    assert q == TraceQuery("timestamps", "first", None,
                           (Filter("activity", "=", "B"), Filter("x", ">=", 2)))
    assert str(q) == 'first timestamps where activity = "B" where x >= 2'
    assert parse_query("attribute icd_code").key == "icd_code"


@pytest.mark.parametrize("text, code", [
    ("rows where x = 1", "UNKNOWN_FIELD"),
    ("events where", "QUERY_SYNTAX"),
    ("events where x ~ 1", "QUERY_SYNTAX"),
    ("attribute", "QUERY_SYNTAX"),
    ("events extra", "QUERY_SYNTAX"),
])
def test_parse_errors(text, code):
    with pytest.raises(EventLogError) as err:
        parse_query(text)
    assert err.value.code == code


def test_query_semantics():
    t = make_trace(("A", "2022-01-01T10:00", {"x": 1}), ("b", "2022-01-01T11:00", {"x": "1"}),
                   ("B", "2022-01-01T12:00", {"x": 3, "flag": True}))
    assert [e.timestamp.hour for e in query_trace(t, 'events where activity = "B"')] == [11, 12]
    # no cross-type matches: "1" is not 1
    assert query_trace(t, "attribute x where x >= 1") == [1, 3]
    assert query_trace(t, "count events where flag = true") == [1]
    assert query_trace(t, "events where flag > false") == []
    assert query_trace(t, "last attribute x") == [3]
    assert query_trace(t, 'first events where activity = "Z"') == []


def test_binding_types():
    assert binding_type(parse_query("count events")) == "integer"
    assert binding_type(parse_query("first timestamps")) == "timestamp"
    assert binding_type(parse_query("attribute x")) == "list[any]"
    assert binding_type(parse_query("last events")) == "event"


literals = st.one_of(st.integers(-10**6, 10**6), st.booleans(),
                     st.text(max_size=6), st.floats(allow_nan=False, allow_infinity=False),
                     st.datetimes(timezones=st.just(timezone.utc), min_value=datetime(1970, 1, 1)))


@st.composite
def queries(draw):
    target = draw(st.sampled_from(["events", "timestamps", "attribute"]))
    key = draw(st.sampled_from(["x", "y", "w"])) if target == "attribute" else None
    filters = tuple(Filter(draw(st.sampled_from(["activity", "x", "y", "w"])),
                           draw(st.sampled_from(["=", "!=", "<", "<=", ">", ">="])), draw(literals))
                    for _ in range(draw(st.integers(0, 3))))
    return TraceQuery(target, draw(st.sampled_from(["all", "first", "last", "count"])), key, filters)


@given(queries())
def test_print_parse_round_trip(q):
    assert parse_query(str(q)) == q


@given(queries(), st.randoms(use_true_random=False))
def test_query_matches_naive_scan(q, rnd):
    trace = random_trace(random.Random(rnd.random()))
    got = query_trace(trace, q)
    want = oracle_query(trace.events, q)
    if q.selector == "count":
        assert got == [want]
    elif q.selector in ("first", "last"):
        assert got == ([] if want is None else [want])
    else:
        assert got == want
