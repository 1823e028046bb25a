from __future__ import annotations

from fractions import Fraction

import pytest

from streamspan.errors import ParameterError
from streamspan.graph import bfs_distances, spanner_stretch
from streamspan.instances import complete_graph, cycle_graph, gnp, to_stream
from streamspan.multipass import (
    BS,
    KW,
    RecursionParams,
    SuperGraphView,
    baswana_sen,
    bs_clustering,
    ceil_root,
    expected_cluster_count,
    kapralov_woodruff,
    kw_clustering,
    pass_bound,
    recursive_spanner,
    stretch_bound,
)
from streamspan.stream import Op, StreamSource, UpdateEvent


# ── Closed forms ─────────────────────────────────────────────────────────────

@pytest.mark.parametrize(
    "k,g,scheme,stretch,passes",
    [
        (7, 1, KW, 29, 2),
        (7, 1, BS, 13, 4),
        (31, 2, BS, 97, 7),
        (31, 2, KW, 449, 3),
        (31, 1, KW, 2 ** 17 - 3, 2),
        (3, 1, KW, 5, 2),
    ],
)
def test_bound_table(k, g, scheme, stretch, passes):
    assert stretch_bound(k, g, scheme) == stretch
    assert pass_bound(k, g, scheme) == passes


@pytest.mark.parametrize("q,g,expected", [(Fraction(4), 2, 2), (Fraction(5), 2, 3), (Fraction(27), 3, 3), (Fraction(1, 2), 1, 1)])
def test_ceil_root_is_exact(q, g, expected):
    assert ceil_root(q, g) == expected


def test_recursion_params_validate_k_and_g():
    with pytest.raises(ParameterError):
        RecursionParams.from_k(4, 3)
    with pytest.raises(ParameterError):
        RecursionParams.from_k(8, 1, n=64)
    with pytest.raises(ParameterError):
        RecursionParams.from_k(0.5, 1)
    params = RecursionParams.from_k(4, 2)
    assert params.r == 1
    assert params.d(1) == pytest.approx(0.25)
    assert params.d(2) == pytest.approx(0.5)


def test_unknown_scheme_is_rejected():
    with pytest.raises(ParameterError):
        stretch_bound(7, 1, "nope")


def test_expected_cluster_count():
    assert expected_cluster_count(256, 0.5, 2) == (64.0, 48.0)


# ── Super-graph view ─────────────────────────────────────────────────────────

def test_contracted_view_drops_internal_and_unclustered_edges():
    src = StreamSource.from_graph(cycle_graph(6))
    view = SuperGraphView.contract(src, [frozenset({0, 1}), frozenset({2, 3})])
    assert view.size == 2
    assert view.translate(UpdateEvent(Op.INSERT, (0, 1))) is None
    assert view.translate(UpdateEvent(Op.INSERT, (1, 2))) == (0, 1)
    assert view.translate(UpdateEvent(Op.INSERT, (4, 5))) is None
    assert view.base_members([0, 1]) == frozenset({0, 1, 2, 3})


def test_contract_rejects_overlap():
    src = StreamSource.from_graph(cycle_graph(4))
    with pytest.raises(ParameterError):
        SuperGraphView.contract(src, [frozenset({0, 1}), frozenset({1, 2})])


# ── Clusterings ──────────────────────────────────────────────────────────────

def _radius_ok(result, bound):
    for center, members in zip(result.partition.centers, result.partition.base_clusters):
        dist = bfs_distances(result.h, center).dist
        assert all(dist[v] <= bound for v in members)


def test_bs_clustering_radius_and_passes():
    g = gnp(80, 0.1, seed=3)
    res = bs_clustering(StreamSource.from_graph(g), 80 ** (-1 / 3), 2, seed=1)
    assert res.passes == 2 + res.retries
    assert res.h.edges <= g.edges
    _radius_ok(res, 2)


def test_bs_clustering_rate_one_keeps_singletons():
    g = gnp(20, 0.3, seed=0)
    res = bs_clustering(StreamSource.from_graph(g), 1.0, 2, seed=0)
    assert len(res.partition) == g.n
    assert all(len(c) == 1 for c in res.partition.base_clusters)


def test_kw_clustering_radius_and_passes():
    g = gnp(80, 0.1, seed=5)
    res = kw_clustering(StreamSource.from_graph(g), 80 ** (-1 / 3), 2, seed=2)
    assert res.passes == 2 + res.retries
    assert res.h.edges <= g.edges
    _radius_ok(res, 2 ** 2 - 1)


def test_clustering_rejects_bad_rate():
    src = StreamSource.from_graph(cycle_graph(5))
    with pytest.raises(ParameterError):
        bs_clustering(src, 0.0, 1)
    with pytest.raises(ParameterError):
        kw_clustering(src, 1.5, 1)


@pytest.mark.slow
@pytest.mark.parametrize("cluster", [bs_clustering, kw_clustering])
def test_cluster_count_matches_binomial(cluster):
    n, i = 256, 2
    p = n ** (-1 / 3)
    src = StreamSource.from_graph(gnp(n, 0.1, seed=1))
    counts = [len(cluster(src, p, i, seed=s).partition) for s in range(200)]
    mean, var = expected_cluster_count(n, p, i)
    avg = sum(counts) / len(counts)
    sample_var = sum((c - avg) ** 2 for c in counts) / (len(counts) - 1)
    assert abs(avg - mean) <= 3 * (var / len(counts)) ** 0.5
    assert var / 2 <= sample_var <= 2 * var


def test_bs_and_kw_sample_the_same_centers(small_gnp):
    src = StreamSource.from_graph(small_gnp)
    p = small_gnp.n ** (-1 / 3)
    for seed in range(3):
        bs = bs_clustering(src, p, 2, seed=seed)
        kw = kw_clustering(src, p, 2, seed=seed)
        assert len(bs.partition) == len(kw.partition)


# ── Spanners ─────────────────────────────────────────────────────────────────

def test_baswana_sen_on_cycle_keeps_the_cycle():
    g = cycle_graph(50)
    res = baswana_sen(StreamSource.from_graph(g), 2, seed=0)
    assert res.passes == 2 + res.retries
    assert res.spanner == g


def test_baswana_sen_complete_graph():
    g = complete_graph(16)
    res = baswana_sen(to_stream(g, 0.2, seed=1), 2, seed=3)
    assert res.spanner.edges <= g.edges
    assert spanner_stretch(g, res.spanner).within(3)


def test_kapralov_woodruff_two_passes():
    g = complete_graph(16)
    res = kapralov_woodruff(StreamSource.from_graph(g), 3, seed=4)
    assert res.passes == 2 + res.retries
    assert spanner_stretch(g, res.spanner).within(7)
    assert "terminal_clusters" in res.details


def test_kapralov_woodruff_k1_returns_graph():
    g = gnp(30, 0.2, seed=2)
    res = kapralov_woodruff(StreamSource.from_graph(g), 1, seed=0)
    assert res.spanner == g


def test_spanners_reject_fractional_k():
    with pytest.raises(ParameterError):
        baswana_sen(StreamSource.from_graph(cycle_graph(5)), 1.5)


@pytest.mark.parametrize("k,g,scheme,n", [(3, 1, KW, 64), (4, 2, KW, 64), (7, 1, BS, 128)])
def test_recursive_spanner_meets_bounds(k, g, scheme, n):
    graph = gnp(n, 0.15, seed=n + k)
    res = recursive_spanner(to_stream(graph, 0.1, seed=2), k, g, scheme, seed=1)
    assert res.passes == pass_bound(k, g, scheme) + res.retries
    assert res.spanner.edges <= graph.edges
    assert spanner_stretch(graph, res.spanner).within(stretch_bound(k, g, scheme))
    assert res.details["r"] == RecursionParams.from_k(k, g).r


def test_recursive_spanner_rejects_unknown_scheme():
    with pytest.raises(ParameterError):
        recursive_spanner(StreamSource.from_graph(cycle_graph(8)), 2, 1, "nope")


@pytest.mark.slow
@pytest.mark.parametrize("scheme", [KW, BS])
@pytest.mark.parametrize("k,g", [(3, 1), (7, 1), (7, 2)])
def test_recursive_matrix_at_512(scheme, k, g):
    graph = gnp(512, 0.05, seed=k * 10 + g)
    res = recursive_spanner(StreamSource.from_graph(graph), k, g, scheme, seed=3)
    assert res.passes == pass_bound(k, g, scheme) + res.retries
    assert spanner_stretch(graph, res.spanner).within(stretch_bound(k, g, scheme))
