from __future__ import annotations

import pytest

from streamspan.errors import InputError, RandomnessExhausted, UsageError
from streamspan.graph import UnweightedGraph
from streamspan.instances import gnp, to_stream
from streamspan.stream import (
    EdgeCollector,
    Op,
    PassScheduler,
    StreamSource,
    UpdateEvent,
    checkpoint,
    format_stream,
    open_pass,
    parse_stream,
    read_stream,
    write_stream,
)


def _events(*triples):
    return [UpdateEvent(Op(op), (u, v)) for op, u, v in triples]


# ── Sources ──────────────────────────────────────────────────────────────────

def test_materialize_applies_deletions():
    src = StreamSource(4, _events(("+", 0, 1), ("+", 1, 2), ("-", 0, 1), ("+", 2, 3)))
    assert src.materialize().edges == frozenset({(1, 2), (2, 3)})
    assert src.deletions == 1
    assert len(src) == 4


def test_delete_of_absent_edge_is_rejected():
    with pytest.raises(InputError, match="absent"):
        StreamSource(3, _events(("+", 0, 1), ("-", 1, 2)))


def test_double_insert_is_rejected():
    with pytest.raises(InputError, match="second insert"):
        StreamSource(3, _events(("+", 0, 1), ("+", 0, 1)))


def test_reinsert_after_delete_is_allowed():
    src = StreamSource(3, _events(("+", 0, 1), ("-", 0, 1), ("+", 0, 1)))
    assert src.materialize().edges == frozenset({(0, 1)})


def test_out_of_range_vertex_is_rejected():
    with pytest.raises(InputError):
        StreamSource(2, _events(("+", 0, 2)))


def test_replay_order_is_stable():
    src = to_stream(gnp(30, 0.2, seed=1), 0.3, seed=5)
    assert list(src) == list(src)


# ── Text format ──────────────────────────────────────────────────────────────

def test_parse_stream_with_comments_and_blank_lines():
    text = "# sample\nn 4\n\n+ 0 1\n+ 3 2  \n- 0 1\n"
    src = parse_stream(text)
    assert src.n == 4
    assert src.materialize().edges == frozenset({(2, 3)})


@pytest.mark.parametrize(
    "text",
    [
        "+ 0 1\n",
        "n 3\n* 0 1\n",
        "n 3\n+ 0 x\n",
        "n 3\n+ 1 1\n",
    ],
)
def test_parse_stream_rejects_malformed_input(text):
    with pytest.raises(InputError):
        parse_stream(text)


def test_stream_file_round_trip(tmp_path):
    src = to_stream(gnp(20, 0.3, seed=2), 0.25, seed=3)
    path = tmp_path / "s.txt"
    write_stream(src, path)
    back = read_stream(path)
    assert format_stream(back) == format_stream(src)
    assert back.materialize() == src.materialize()


# ── Scheduler ────────────────────────────────────────────────────────────────

def test_run_pass_counts_once_per_pass_for_many_consumers():
    src = StreamSource.from_graph(gnp(15, 0.3, seed=4))
    sched = PassScheduler(src)
    seen_a, seen_b = [], []
    sched.run_pass(seen_a.append, seen_b.append)
    assert sched.passes_opened == 1
    assert seen_a == seen_b == list(src)
    sched.run_pass(lambda ev: None)
    assert sched.passes_opened == 2


def test_open_pass_and_checkpoint_helpers():
    src = StreamSource.from_graph(gnp(10, 0.4, seed=2))
    sched = PassScheduler(src)
    seen = []
    assert open_pass(sched, seen.append) == 1
    assert seen == list(src)
    checkpoint(sched, 77)
    assert sched.peak_words == 77


def test_empty_stream_still_counts_a_pass():
    sched = PassScheduler(StreamSource(3, []))
    calls = []
    sched.run_pass(calls.append)
    assert calls == []
    assert sched.passes_opened == 1


def test_nested_pass_is_a_usage_error():
    src = StreamSource.from_graph(UnweightedGraph(2, frozenset({(0, 1)})))
    sched = PassScheduler(src)

    def nested(ev):
        sched.run_pass(lambda _: None)

    with pytest.raises(UsageError):
        sched.run_pass(nested)
    sched.run_pass(lambda _: None)
    assert sched.passes_opened == 2


def test_checkpoint_tracks_peak():
    sched = PassScheduler(StreamSource(1, []))
    for words in (10, 300, 40):
        sched.checkpoint(words)
    sched.charge(120, "blackbox")
    assert sched.peak_words == 300
    assert sched.space.charges == [("blackbox", 120)]


def test_with_retries_counts_replays():
    sched = PassScheduler(StreamSource(1, []), max_retries=3)
    attempts = []

    def attempt(number):
        attempts.append(number)
        return "ok" if number == 2 else None

    assert sched.with_retries("probe", attempt) == "ok"
    assert attempts == [0, 1, 2]
    assert sched.retries == 2


def test_with_retries_exhausts():
    sched = PassScheduler(StreamSource(1, []), max_retries=1)
    with pytest.raises(RandomnessExhausted):
        sched.with_retries("probe", lambda number: None)
    assert sched.retries == 1


def test_edge_collector_restricts_to_vertices():
    src = StreamSource(4, _events(("+", 0, 1), ("+", 1, 2), ("+", 2, 3), ("-", 1, 2)))
    inside = EdgeCollector(4, vertices=[0, 1, 2])
    everything = EdgeCollector(4)
    PassScheduler(src).run_pass(inside, everything)
    assert inside.graph().edges == frozenset({(0, 1)})
    assert everything.graph() == src.materialize()
