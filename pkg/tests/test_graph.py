from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from streamspan.errors import InputError, SubgraphViolation
from streamspan.graph import (
    UNREACHABLE,
    ResistanceOracle,
    UnweightedGraph,
    WeightedGraph,
    all_pairs_stretch,
    bfs_distances,
    canonical_edge,
    cut_weight,
    effective_resistance,
    format_graph,
    layer_cut_check,
    pair_from_index,
    pair_index,
    parse_graph,
    read_graph,
    spanner_stretch,
    sum_weighted_resistances,
    write_graph,
)
from streamspan.instances import complete_graph, cycle_graph, gnp, path_graph, star_graph


# ── Encoding ─────────────────────────────────────────────────────────────────

def test_canonical_edge_orders_and_rejects_loops():
    assert canonical_edge(5, 2) == (2, 5)
    with pytest.raises(InputError):
        canonical_edge(3, 3)


def test_pair_index_bijection_small_n():
    n = 7
    seen = set()
    for u, v in itertools.combinations(range(n), 2):
        idx = pair_index((u, v), n)
        assert pair_from_index(idx, n) == (u, v)
        seen.add(idx)
    assert len(seen) == n * (n - 1) // 2


def test_graph_rejects_non_canonical_edges():
    with pytest.raises(InputError):
        UnweightedGraph(3, frozenset({(2, 1)}))
    with pytest.raises(InputError):
        UnweightedGraph(3, frozenset({(0, 3)}))


# ── BFS and stretch ──────────────────────────────────────────────────────────

def test_bfs_on_path(path3):
    assert bfs_distances(path3, 0).dist == (0, 1, 2)


def test_bfs_isolated_vertex_unreachable():
    g = UnweightedGraph.from_edges(3, [(0, 1)])
    assert bfs_distances(g, 0)[2] == UNREACHABLE


def test_bfs_layered_shortcut(layered45):
    dist = bfs_distances(layered45.graph, layered45.u)
    assert dist[layered45.v] == 1


def test_bfs_edge_lipschitz(small_gnp):
    dist = bfs_distances(small_gnp, 0)
    for a, b in small_gnp.edges:
        if math.isfinite(dist[a]) or math.isfinite(dist[b]):
            assert dist[b] <= dist[a] + 1 and dist[a] <= dist[b] + 1


def test_stretch_identity(small_gnp):
    assert spanner_stretch(small_gnp, small_gnp).max_stretch == 1


def test_stretch_cycle_minus_edge(c8):
    h = c8.without([(0, 7)])
    report = spanner_stretch(c8, h)
    assert report.max_stretch == 7
    assert report.witness_edge == (0, 7)


def test_stretch_k4_star():
    g = complete_graph(4)
    h = UnweightedGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert spanner_stretch(g, h).max_stretch == 2


def test_stretch_disconnected_spanner_is_infinite(c8):
    h = c8.without([(0, 7), (3, 4)])
    report = spanner_stretch(c8, h)
    assert not report.finite
    assert not report.within(100)


def test_stretch_rejects_non_subgraph(c8):
    h = c8.union(UnweightedGraph.from_edges(8, [(0, 4)]))
    with pytest.raises(SubgraphViolation):
        spanner_stretch(c8, h)


@pytest.mark.parametrize("seed", range(5))
def test_edge_restricted_stretch_matches_all_pairs(seed):
    g = gnp(30, 0.2, seed)
    rng = np.random.default_rng(seed)
    keep = [e for e in g.sorted_edges if rng.random() < 0.7]
    h = UnweightedGraph(g.n, frozenset(keep))
    edge_stretch = spanner_stretch(g, h).max_stretch
    assert edge_stretch == pytest.approx(all_pairs_stretch(g, h))


# ── Resistance ───────────────────────────────────────────────────────────────

def test_resistance_series_path():
    assert effective_resistance(path_graph(5), 0, 4) == pytest.approx(4.0)


def test_resistance_triangle(triangle):
    assert effective_resistance(triangle, 0, 1) == pytest.approx(2.0 / 3.0)


def test_resistance_layered_shortcut(layered45):
    r = effective_resistance(layered45.graph, layered45.u, layered45.v)
    assert r == pytest.approx(12.0 / 28.0, abs=1e-9)
    assert r == pytest.approx(layered45.shortcut_resistance(), abs=1e-9)


def test_resistance_disconnected_is_infinite():
    g = UnweightedGraph.from_edges(4, [(0, 1), (2, 3)])
    assert math.isinf(effective_resistance(g, 0, 3))


def test_sum_weighted_resistances():
    assert sum_weighted_resistances(path_graph(3)) == pytest.approx(2.0)
    assert sum_weighted_resistances(complete_graph(3)) == pytest.approx(2.0)
    two_edges = UnweightedGraph.from_edges(4, [(0, 1), (2, 3)])
    assert sum_weighted_resistances(two_edges) == pytest.approx(2.0)


def test_sum_resistances_connected_is_n_minus_one():
    g = gnp(60, 0.3, seed=3)
    oracle = ResistanceOracle(g)
    assert oracle.components == 1
    assert sum_weighted_resistances(g) == pytest.approx(g.n - 1, abs=1e-8)


def test_resistance_at_most_distance_for_unit_edges(small_gnp):
    resist = ResistanceOracle(small_gnp).edge_resistances()
    assert np.all(resist <= 1.0 + 1e-12)


def test_cg_agrees_with_dense(small_gnp):
    dense = ResistanceOracle(small_gnp)
    iterative = ResistanceOracle(small_gnp, dense_limit=0)
    for u, v in small_gnp.sorted_edges[:15]:
        assert iterative.resistance(u, v) == pytest.approx(dense.resistance(u, v), rel=1e-6)


# ── Cuts ─────────────────────────────────────────────────────────────────────

def test_cut_weight_basics(triangle):
    assert cut_weight(triangle, []) == 0
    assert cut_weight(triangle, [0]) == 2


def test_cut_weight_matches_scan():
    g = gnp(20, 0.5, seed=11)
    rng = np.random.default_rng(0)
    S = {v for v in range(20) if rng.random() < 0.5}
    brute = sum(1 for u, v in g.edges if (u in S) != (v in S))
    assert cut_weight(g, S) == brute


def test_cut_weight_uses_weights():
    h = WeightedGraph(3, {(0, 1): 2.5, (1, 2): 1.0})
    assert cut_weight(h, [0]) == pytest.approx(2.5)


def test_layer_cut_check_identity_is_clean(small_gnp, path3):
    assert layer_cut_check(small_gnp, small_gnp.weighted(), 0, 0.0).clean
    report = layer_cut_check(path3, path3.weighted(), 0, 0.0)
    assert report.clean
    assert report.w_g == (1.0, 1.0)


def test_layer_cut_check_counts_edges_into_unreached_vertices():
    g = path_graph(4)
    h = WeightedGraph(4, {(0, 1): 1.0, (1, 2): 1.0})
    report = layer_cut_check(g, h, 0, 0.5)
    assert report.layer_sizes == (1, 1, 1, 1)
    assert report.w_g == (1.0, 1.0, 1.0)
    assert report.w_h == (1.0, 1.0, 0.0)
    assert report.violations == (2,)


def test_layer_cut_check_groups_all_unreached_vertices_in_one_layer():
    g = UnweightedGraph(5, frozenset({(0, 1), (1, 2), (1, 3), (3, 4)}))
    h = WeightedGraph(5, {(0, 1): 1.0})
    report = layer_cut_check(g, h, 0, 0.0)
    assert report.layer_sizes == (1, 1, 3)
    assert report.w_g == (1.0, 2.0)


# ── Text I/O ─────────────────────────────────────────────────────────────────

def test_graph_text_roundtrip(tmp_path):
    g = star_graph(5)
    path = tmp_path / "star.txt"
    write_graph(g, path)
    assert read_graph(path) == g


def test_parse_graph_comments_and_errors():
    g = parse_graph("# header\nn 3\n0 1  # edge\n\n2 1\n")
    assert g.edges == {(0, 1), (1, 2)}
    with pytest.raises(InputError):
        parse_graph("0 1\n")
    with pytest.raises(InputError):
        parse_graph("n 3\n0 5\n")
    with pytest.raises(InputError):
        parse_graph("n 3\n0 x\n")


def test_format_graph_sorted():
    g = cycle_graph(4)
    assert format_graph(g).splitlines() == ["n 4", "0 1", "0 3", "1 2", "2 3"]
