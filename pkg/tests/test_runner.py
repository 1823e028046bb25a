from __future__ import annotations

import csv

import pytest

from streamspan.config import OutputConfig, RootConfig
from streamspan.errors import ParameterError
from streamspan.graph import UnweightedGraph
from streamspan.instances import cycle_graph, gnp, path_graph, star_graph, to_stream
from streamspan.parser import parse_family
from streamspan.report import RegressionStore, SpannerResult
from streamspan.runner import (
    BENCH_COLUMNS,
    AlgoParams,
    bench,
    bench_matrix,
    declared_bound,
    declared_passes,
    execute,
    execute_with_result,
    regression_scale,
    run_algorithm,
)
from streamspan.stream import StreamSource
from streamspan.utils.jsonlog import read_jsonl


@pytest.fixture
def store() -> RegressionStore:
    s = RegressionStore()
    s.tighten("*", "sparsifier", "stretch", 1.0, "test")
    return s


def test_missing_parameter_is_reported():
    with pytest.raises(ParameterError, match="--k"):
        run_algorithm("bs", StreamSource.from_graph(cycle_graph(5)), AlgoParams())


def test_unknown_algorithm():
    with pytest.raises(ParameterError):
        run_algorithm("magic", StreamSource.from_graph(cycle_graph(5)), AlgoParams())


def test_bs_report_on_cycle():
    report = execute("bs", StreamSource.from_graph(cycle_graph(50)), AlgoParams(k=2), "cycle:n=50")
    assert report.passes == 2 + report.retries
    assert report.max_stretch == 1.0
    assert report.declared_bound == 3.0
    assert report.verified
    assert report.details["declared_passes"] == 2


def test_sparsifier_uses_regression_store(store):
    g = gnp(40, 0.2, seed=1)
    report = execute("sparsifier", to_stream(g, 0.2, seed=0), AlgoParams(seed=3), "gnp:n=40,p=0.2", store=store)
    assert report.declared_bound == pytest.approx(regression_scale("sparsifier", 40, g.m, AlgoParams()))
    assert report.verified


def test_regression_algo_without_store_is_unverified():
    report = execute("sparsifier", StreamSource.from_graph(path_graph(6)), AlgoParams())
    assert report.declared_bound is None
    assert not report.verified


def test_peeling_judged_on_peeled_edges():
    g = star_graph(9)
    report, result = execute_with_result("peeling", StreamSource.from_graph(g), AlgoParams(s=2))
    assert report.declared_bound == 1.0
    assert report.verified
    assert result.spanner == g
    assert report.rounds == 1


def test_filtering_declares_t_when_emptied():
    g = path_graph(12)
    report = execute("filtering", StreamSource.from_graph(g), AlgoParams(t=3.0, rounds=2))
    assert report.declared_bound == 3.0
    assert report.verified
    assert report.details["surviving"][-1] == 0


def test_filtering_resolves_t_from_regime():
    report = execute("filtering", StreamSource.from_graph(path_graph(8)), AlgoParams(rounds=1, regime="ldd"))
    assert report.details["t"] > 1


def test_declared_bounds_per_algorithm():
    empty = SpannerResult(UnweightedGraph(4))
    assert declared_bound("kw", 4, 0, AlgoParams(k=3), empty) == 7
    assert declared_bound("recursive-kw", 128, 0, AlgoParams(k=7, g=1), empty) == 29
    assert declared_bound("recursive-bs", 128, 0, AlgoParams(k=7, g=1), empty) == 13
    assert declared_passes("recursive-bs", AlgoParams(k=7, g=1)) == 4
    assert declared_passes("kw", AlgoParams(k=5)) == 2
    assert declared_passes("scm", AlgoParams()) is None


def test_run_log_is_appended(tmp_path):
    log = tmp_path / "runs" / "log.jsonl"
    cfg = RootConfig(output=OutputConfig(run_log=str(log)))
    src = StreamSource.from_graph(cycle_graph(10))
    execute("kw", src, AlgoParams(k=1), "cycle:n=10", cfg)
    execute("kw", src, AlgoParams(k=1), "cycle:n=10", cfg)
    rows = read_jsonl(log)
    assert len(rows) == 2
    assert rows[0]["event"] == "run"
    assert rows[0]["algo"] == "kw"


def test_reports_are_reproducible():
    src = to_stream(gnp(40, 0.2, seed=4), 0.3, seed=1)
    a = execute("kw", src, AlgoParams(seed=5, k=2), "gnp")
    b = execute("kw", src, AlgoParams(seed=5, k=2), "gnp")
    assert a.canonical_json() == b.canonical_json()


# ── Bench ────────────────────────────────────────────────────────────────────

def test_bench_matrix_is_a_product():
    fams = [parse_family("cycle:n=12"), parse_family("gnp:n=20,p=0.2")]
    cells = bench_matrix(["bs", "kw"], fams, [0, 1], {"k": [1, 2]})
    assert len(cells) == 2 * 2 * 2 * 2
    assert {c.params.k for c in cells} == {1, 2}


def test_bench_writes_csv(tmp_path, store):
    fams = [parse_family("cycle:n=12")]
    cells = bench_matrix(["bs", "sparsifier"], fams, [0], {"k": [2]})
    out = tmp_path / "bench.csv"
    rows = bench(cells, RootConfig(), store, out, workers=2)
    assert [r["algo"] for r in rows] == ["bs", "sparsifier"]
    with out.open() as f:
        reader = csv.DictReader(f)
        assert reader.fieldnames == BENCH_COLUMNS
        lines = list(reader)
    assert len(lines) == 2
    assert lines[0]["family"] == "cycle:n=12"
    assert lines[0]["verified"] == "True"
