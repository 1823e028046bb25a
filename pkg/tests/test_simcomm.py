from __future__ import annotations

import json
import math

import pytest

from streamspan.errors import FirewallViolation, ParameterError
from streamspan.graph import WeightedGraph, spanner_stretch
from streamspan.instances import complete_graph, gnp, path_graph, star_graph
from streamspan.simcomm import (
    BLACKBOX,
    EXACT,
    WORD_BITS,
    CommMeter,
    NeighborhoodVault,
    Simulator,
    blackbox_words,
    filtering_spanner,
    ldd,
    ldd_phi,
    low_degree_peeling,
    peel_oracle,
    scm_tradeoff,
    t_for_regime,
)
from streamspan.sketches import SketchSeed, SparseRecoverySketch
from streamspan.sparsify import sample_by_resistance


# ── Simulator plumbing ───────────────────────────────────────────────────────

def test_vault_blocks_foreign_reads():
    vault = NeighborhoodVault(path_graph(3))
    assert vault.read(1, 1) == (0, 2)
    with pytest.raises(FirewallViolation):
        vault.read(0, 1)
    assert vault.foreign_reads() == [(0, 1)]


def test_simulator_posts_in_player_order():
    g = path_graph(5)
    sim = Simulator(g, seed=0, workers=3)
    posts = sim.round(lambda view: bytes([len(view.neighbors())]))
    assert list(posts) == list(range(5))
    assert [p[0] for p in posts.values()] == [1, 2, 2, 2, 1]
    assert sim.meter.max_bits_per_player_per_round == 8
    assert sim.vault.foreign_reads() == []


def test_player_cannot_peek_during_round():
    sim = Simulator(path_graph(3), seed=0)
    with pytest.raises(FirewallViolation):
        sim.round(lambda view: bytes(view.read((view.player + 1) % 3)))


def test_meter_separates_rounds_and_labels():
    meter = CommMeter()
    meter.record_posts(0, {0: b"ab", 1: b"a"})
    meter.charge_blackbox(1, [0, 1], words=2)
    assert meter.rounds == 2
    assert meter.totals() == [24, 256]
    assert meter.max_bits_per_player_per_round == 128
    assert meter.charging == tuple(sorted((EXACT, BLACKBOX)))
    with pytest.raises(ParameterError):
        meter.add(0, 0, -1, EXACT)


# ── Peeling ──────────────────────────────────────────────────────────────────

def test_peeling_star_recovers_everything():
    g = star_graph(9)
    run = low_degree_peeling(g, 2, seed=1)
    assert set(run.result.v1) == set(range(10))
    assert not run.result.v2
    assert run.result.recovered == g
    assert run.vault.foreign_reads() == []


def test_peeling_complete_graph_peels_nothing():
    run = low_degree_peeling(complete_graph(6), 2, seed=0)
    assert run.result.v1 == ()
    assert run.result.v2 == frozenset(range(6))
    assert run.result.recovered.m == 0


def test_peeling_matches_oracle_on_sparse_random_graph():
    g = gnp(200, 0.02, seed=3)
    run = low_degree_peeling(g, 4, seed=2, workers=4, replay_players=range(4))
    assert run.result.key() == peel_oracle(g, 4).key()
    assert run.replays == 4
    for v in run.result.v2:
        assert g.induced(run.result.v2).degree(v) > 4


def test_peeling_message_size():
    g = gnp(50, 0.1, seed=0)
    run = low_degree_peeling(g, 3, seed=0)
    words = SparseRecoverySketch(50, 3, SketchSeed.derive(0, "peel")).words
    assert run.meter.max_bits_per_player_per_round == 8 * (8 + 8 * words)
    assert run.meter.rounds == 1


def test_peeling_rejects_zero_budget():
    with pytest.raises(ParameterError):
        low_degree_peeling(path_graph(3), 0)


# ── Filtering ────────────────────────────────────────────────────────────────

def test_t_for_regime_values():
    assert t_for_regime(64, 1, "resistance", 4.0) == pytest.approx(4 * 16 * 36)
    assert t_for_regime(64, 2, "ldd") == pytest.approx(12 * 64 * math.log(64))
    assert ldd_phi(64, 2) == pytest.approx(1 / (64 * 3))
    with pytest.raises(ParameterError):
        t_for_regime(64, 1, "other")


def test_filtering_on_tree_empties_in_one_round():
    g = path_graph(25)
    res = filtering_spanner(g, t=3.0, rounds=4, seed=1)
    assert res.emptied
    assert res.rounds_used == 1
    assert res.spanner == g
    assert res.history[0].surviving == g.edges
    assert res.history[-1].surviving == frozenset()


def test_filtering_history_is_monotone(small_gnp):
    res = filtering_spanner(small_gnp, t=2.0, rounds=3, seed=4)
    sizes = [len(state.surviving) for state in res.history]
    assert sizes == sorted(sizes, reverse=True)
    assert res.spanner.edges <= small_gnp.edges
    assert spanner_stretch(small_gnp, res.spanner).within(2.0) == res.emptied


def test_filtering_charges_supplied_sketch_size():
    g = path_graph(25)
    default = filtering_spanner(g, t=3.0, rounds=2, seed=1)
    assert default.meter.max_bits_per_player_per_round == WORD_BITS * blackbox_words(25)
    small = filtering_spanner(g, t=3.0, rounds=2, seed=1, players=[0, 1, 2], words=blackbox_words(3))
    assert small.meter.max_bits_per_player_per_round == WORD_BITS * blackbox_words(3)
    assert set(small.meter.bits) == {(0, 0), (0, 1), (0, 2)}


def test_filtering_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        filtering_spanner(path_graph(3), t=0.5, rounds=1)
    with pytest.raises(ParameterError):
        filtering_spanner(path_graph(3), t=2.0, rounds=0)


# ── Low-diameter decomposition ───────────────────────────────────────────────

def test_ldd_single_vertex():
    res = ldd(WeightedGraph(1, {}), 0.5)
    assert res.clusters == (frozenset({0}),)
    assert res.radii == (0,)
    assert res.certificate().holds


def test_ldd_star_swallows_whole_graph():
    res = ldd(star_graph(9).weighted(), 0.5)
    assert res.clusters == (frozenset(range(10)),)
    assert res.cut == 0.0
    assert res.certificate().holds


def test_ldd_certificate_on_sampled_sparsifier():
    g = gnp(120, 0.1, seed=6)
    h = sample_by_resistance(g, scale=2.0, seed=1)
    phi = 0.2
    res = ldd(h, phi)
    cert = res.certificate()
    assert cert.holds
    assert res.cut <= phi * h.volume + 1e-9
    owner = res.cluster_of()
    assert all(o >= 0 for o in owner)


def test_ldd_rejects_light_edges_and_bad_phi():
    with pytest.raises(ParameterError):
        ldd(WeightedGraph(2, {(0, 1): 0.5}), 0.3)
    with pytest.raises(ParameterError):
        ldd(WeightedGraph(2, {(0, 1): 1.0}), 1.0)


# ── Tradeoff ─────────────────────────────────────────────────────────────────

def test_scm_one_round(tmp_path):
    g = gnp(30, 0.2, seed=2)
    path = tmp_path / "board.jsonl"
    res = scm_tradeoff(g, 0.5, 1, seed=3, transcript=path)
    assert res.rounds == 1
    assert res.spanner.edges <= g.edges
    assert spanner_stretch(g, res.spanner).finite
    assert res.details["s"] == math.ceil(30 ** 0.5)
    if res.details["v2"]:
        assert res.details["v2_min_degree"] > res.details["s"]
    rows = [json.loads(line) for line in path.read_text().splitlines()]
    assert [row["player"] for row in rows] == list(range(30))
    assert res.max_bits_per_player_per_round > 0
    assert BLACKBOX in res.charging and EXACT in res.charging


def test_scm_multi_round_filters_each_subset():
    g = gnp(30, 0.2, seed=5)
    res = scm_tradeoff(g, 0.5, 2, seed=1)
    assert res.details["emptied"]
    assert res.details["rounds_used"] >= 1
    assert spanner_stretch(g, res.spanner).within(res.details["t"])
    assert res.charging == (BLACKBOX,)


def test_scm_rejects_alpha_out_of_range():
    with pytest.raises(ParameterError):
        scm_tradeoff(path_graph(4), 0.0, 1)
