from __future__ import annotations

import pytest

from streamspan.graph import UnweightedGraph
from streamspan.instances import complete_graph, cycle_graph, gnp, layered_custom, path_graph
from streamspan.stream import StreamSource


@pytest.fixture
def triangle() -> UnweightedGraph:
    return complete_graph(3)


@pytest.fixture
def path3() -> UnweightedGraph:
    return path_graph(3)


@pytest.fixture
def c8() -> UnweightedGraph:
    return cycle_graph(8)


@pytest.fixture
def layered45():
    return layered_custom(4, 5)


@pytest.fixture
def small_gnp() -> UnweightedGraph:
    return gnp(40, 0.2, seed=7)


@pytest.fixture
def stream_of():
    def make(g: UnweightedGraph) -> StreamSource:
        return StreamSource.from_graph(g)
    return make
