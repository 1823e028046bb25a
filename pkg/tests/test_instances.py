from __future__ import annotations

import math

import pytest

from streamspan.errors import ParameterError
from streamspan.graph import effective_resistance
from streamspan.instances import (
    complete_graph,
    conjectured_hard,
    cut_bad_instance,
    cut_bad_sparsifier,
    cut_scan,
    cycle_graph,
    gnp,
    layered_custom,
    layered_instance,
    star_graph,
    to_stream,
)
from streamspan.stream import Op


def test_gnp_is_seeded():
    assert gnp(50, 0.1, seed=3) == gnp(50, 0.1, seed=3)
    assert gnp(50, 0.1, seed=3) != gnp(50, 0.1, seed=4)


def test_gnp_extremes():
    assert gnp(10, 0.0, seed=0).m == 0
    assert gnp(10, 1.0, seed=0) == complete_graph(10)
    with pytest.raises(ParameterError):
        gnp(10, 1.5, seed=0)


def test_star_center_placement():
    s = star_graph(9)
    assert s.n == 10
    assert s.degree(9) == 9
    assert star_graph(4, center_last=False).degree(0) == 4


def test_layered_shape(layered45):
    assert layered45.n == 4 * 5 + 2
    assert layered45.graph.m == layered45.expected_edges() == 73
    assert layered45.shortcut in layered45.graph.edges
    assert layered45.graph.degree(layered45.u) == 4 + 1


def test_layered_shortcut_resistance_matches_oracle(layered45):
    r = effective_resistance(layered45.graph, *layered45.shortcut)
    assert r == pytest.approx(layered45.shortcut_resistance(), rel=1e-9)
    assert layered45.shortcut_resistance() == pytest.approx(12 / 28)


def test_layered_instance_sizes():
    inst = layered_instance(512)
    c = math.log2(512)
    assert inst.a == math.ceil(c * 512 ** (1 / 3))
    assert inst.N == math.ceil(512 ** (2 / 3) / c)
    with pytest.raises(ParameterError):
        layered_instance(2)


def test_cut_bad_sparsifier_preserves_cuts_but_drops_shortcut():
    inst = cut_bad_instance(64)
    h, eps = cut_bad_sparsifier(inst)
    assert inst.shortcut not in h.weights
    assert eps == pytest.approx(1 / inst.a)
    scan = cut_scan(inst.graph, h, cuts=2000, seed=0)
    assert scan.within(eps)
    assert scan.max_ratio <= 1 + eps + 1e-12


def test_conjectured_hard_plants_a_swap():
    inst = conjectured_hard(200, 5, seed=11)
    for e in inst.planted:
        assert e in inst.graph.edges
    for e in inst.removed:
        assert e not in inst.graph.edges
    assert inst.unplanted().m == inst.graph.m - 2
    assert inst.candidate_pairs == 200 * 5


def test_conjectured_hard_rejects_wide_band():
    with pytest.raises(ParameterError):
        conjectured_hard(20, 5, seed=0)


@pytest.mark.parametrize("ratio", [0.0, 0.2, 0.5])
def test_to_stream_materializes_to_graph(ratio):
    g = gnp(30, 0.15, seed=9)
    src = to_stream(g, ratio, seed=1)
    assert src.materialize() == g
    assert src.deletions == round(ratio * g.m)
    assert sum(ev.op is Op.INSERT for ev in src) == g.m + src.deletions


def test_to_stream_rejects_ratio_of_one():
    with pytest.raises(ParameterError):
        to_stream(cycle_graph(5), 1.0, seed=0)
