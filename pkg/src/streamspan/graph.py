"""
streamspan.graph
~~~~~~~~~~~~~~~~
Exact in-memory graphs and the ground-truth oracles every sketch-based
algorithm is checked against: hop distances, stretch, cuts, Laplacians and
effective resistances.

Edges are always stored as canonical ``(min, max)`` pairs; multiplicity is
never stored. Disconnection is reported with the ``UNREACHABLE`` and
``INFINITE_RESISTANCE`` sentinels instead of exceptions.
"""
from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from scipy.sparse.linalg import LinearOperator, cg

from .errors import InputError, SubgraphViolation

logger = logging.getLogger(__name__)

Edge = Tuple[int, int]

UNREACHABLE = math.inf
INFINITE_RESISTANCE = math.inf

DENSE_SOLVE_LIMIT = 2000
CG_TOLERANCE = 1e-10

_DISTANCE_CHUNK = 256


# ──────────────────────────────────────────────────────────────────────────────
# Edge encoding
# ──────────────────────────────────────────────────────────────────────────────

def canonical_edge(u: int, v: int) -> Edge:
    u, v = int(u), int(v)
    if u == v:
        raise InputError(f"self-loop at vertex {u}")
    return (u, v) if u < v else (v, u)


def pair_index(edge: Edge, n: int) -> int:
    """Fixed bijection from canonical pairs to ``[0, n*n)``: ``u*n + v``."""
    u, v = edge
    return u * n + v


def pair_from_index(index: int, n: int) -> Edge:
    u, v = divmod(int(index), n)
    return (u, v)


def _check_vertex(n: int, v: int) -> None:
    if not 0 <= v < n:
        raise InputError(f"vertex {v} out of range for n={n}")


def _adjacency(n: int, edges: Sequence[Edge], weights: np.ndarray) -> sp.csr_matrix:
    if not edges:
        return sp.csr_matrix((n, n), dtype=float)
    arr = np.asarray(edges, dtype=np.int64)
    rows = np.concatenate([arr[:, 0], arr[:, 1]])
    cols = np.concatenate([arr[:, 1], arr[:, 0]])
    data = np.concatenate([weights, weights]).astype(float)
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def laplacian_matrix(n: int, edges: Sequence[Edge], weights: np.ndarray) -> sp.csr_matrix:
    """``diag(weighted degree) - adjacency`` as a CSR matrix."""
    adj = _adjacency(n, edges, weights)
    degree = np.asarray(adj.sum(axis=1)).ravel()
    return (sp.diags(degree) - adj).tocsr()


# ──────────────────────────────────────────────────────────────────────────────
# Graph types
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class UnweightedGraph:
    n: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        if self.n < 0:
            raise InputError(f"negative vertex count {self.n}")
        for u, v in self.edges:
            if not 0 <= u < v < self.n:
                raise InputError(f"edge {(u, v)} is not a canonical pair for n={self.n}")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]] = ()) -> "UnweightedGraph":
        return cls(n, frozenset(canonical_edge(u, v) for u, v in edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def sorted_edges(self) -> Tuple[Edge, ...]:
        return tuple(sorted(self.edges))

    @cached_property
    def adjacency(self) -> Tuple[Tuple[int, ...], ...]:
        nbrs: List[List[int]] = [[] for _ in range(self.n)]
        for u, v in self.sorted_edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return tuple(tuple(sorted(x)) for x in nbrs)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, u: int, v: int) -> bool:
        return u != v and ((u, v) if u < v else (v, u)) in self.edges

    def csr(self) -> sp.csr_matrix:
        return _adjacency(self.n, self.sorted_edges, np.ones(self.m))

    def laplacian(self) -> sp.csr_matrix:
        return laplacian_matrix(self.n, self.sorted_edges, np.ones(self.m))

    def induced(self, vertices: Iterable[int]) -> "UnweightedGraph":
        """Subgraph on ``vertices``; vertex ids (and n) are kept."""
        keep = set(vertices)
        return UnweightedGraph(self.n, frozenset(e for e in self.edges if e[0] in keep and e[1] in keep))

    def union(self, other: "UnweightedGraph") -> "UnweightedGraph":
        _check_same_n(self.n, other.n)
        return UnweightedGraph(self.n, self.edges | other.edges)

    def without(self, edges: Iterable[Edge]) -> "UnweightedGraph":
        drop = {canonical_edge(u, v) for u, v in edges}
        return UnweightedGraph(self.n, self.edges - drop)

    def weighted(self) -> "WeightedGraph":
        return WeightedGraph(self.n, {e: 1.0 for e in self.edges})


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    n: int
    weights: Mapping[Edge, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 0:
            raise InputError(f"negative vertex count {self.n}")
        clean: Dict[Edge, float] = {}
        for (u, v), w in self.weights.items():
            if not 0 <= u < v < self.n:
                raise InputError(f"edge {(u, v)} is not a canonical pair for n={self.n}")
            if not w > 0:
                raise InputError(f"edge {(u, v)} has non-positive weight {w}")
            clean[(int(u), int(v))] = float(w)
        object.__setattr__(self, "weights", clean)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return self.n == other.n and self.weights == other.weights

    __hash__ = None  # type: ignore[assignment]

    @property
    def edges(self) -> frozenset:
        return frozenset(self.weights)

    @property
    def m(self) -> int:
        return len(self.weights)

    @cached_property
    def sorted_edges(self) -> Tuple[Edge, ...]:
        return tuple(sorted(self.weights))

    def weight_array(self) -> np.ndarray:
        return np.array([self.weights[e] for e in self.sorted_edges], dtype=float)

    def unweighted(self) -> UnweightedGraph:
        return UnweightedGraph(self.n, frozenset(self.weights))

    def csr(self) -> sp.csr_matrix:
        return _adjacency(self.n, self.sorted_edges, self.weight_array())

    def laplacian(self) -> sp.csr_matrix:
        return laplacian_matrix(self.n, self.sorted_edges, self.weight_array())

    def weighted_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n)
        for (u, v), w in self.weights.items():
            deg[u] += w
            deg[v] += w
        return deg

    @property
    def volume(self) -> float:
        return 2.0 * sum(self.weights.values())

    def scaled(self, factor: float) -> "WeightedGraph":
        return WeightedGraph(self.n, {e: w * factor for e, w in self.weights.items()})


AnyGraph = Union[UnweightedGraph, WeightedGraph]


def as_weighted(g: AnyGraph) -> WeightedGraph:
    return g if isinstance(g, WeightedGraph) else g.weighted()


def _check_same_n(a: int, b: int) -> None:
    if a != b:
        raise InputError(f"vertex counts differ: {a} vs {b}")


def check_subgraph(g: UnweightedGraph, h_edges: Iterable[Edge]) -> None:
    extra = sorted(set(h_edges) - g.edges)
    if extra:
        raise SubgraphViolation(extra[0])


# ──────────────────────────────────────────────────────────────────────────────
# Distances and stretch
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class DistanceMap:
    source: int
    dist: Tuple[float, ...]

    def __getitem__(self, v: int) -> float:
        return self.dist[v]


@dataclass(frozen=True)
class StretchReport:
    max_stretch: float
    witness_edge: Optional[Edge]

    @property
    def finite(self) -> bool:
        return math.isfinite(self.max_stretch)

    def within(self, bound: float) -> bool:
        return self.finite and self.max_stretch <= bound


def bfs_distances(g: UnweightedGraph, src: int) -> DistanceMap:
    _check_vertex(g.n, src)
    dist: List[float] = [UNREACHABLE] * g.n
    dist[src] = 0
    queue = deque([src])
    adj = g.adjacency
    while queue:
        a = queue.popleft()
        nxt = dist[a] + 1
        for b in adj[a]:
            if math.isinf(dist[b]):
                dist[b] = nxt
                queue.append(b)
    return DistanceMap(source=src, dist=tuple(dist))


def pair_distances(
    h: UnweightedGraph,
    pairs: Iterable[Tuple[int, int]],
    limit: Optional[float] = None,
) -> Dict[Edge, float]:
    """
    Hop distances in ``h`` for every pair, batched by source vertex.

    With ``limit`` set, distances above it come back as ``UNREACHABLE``.
    """
    by_source: Dict[int, List[int]] = {}
    for u, v in pairs:
        a, b = canonical_edge(u, v)
        by_source.setdefault(a, []).append(b)
    out: Dict[Edge, float] = {}
    if not by_source:
        return out

    mat = h.csr()
    sources = sorted(by_source)
    bound = np.inf if limit is None else float(limit)
    for start in range(0, len(sources), _DISTANCE_CHUNK):
        chunk = sources[start:start + _DISTANCE_CHUNK]
        dist = csgraph.dijkstra(mat, directed=False, indices=chunk, unweighted=True, limit=bound)
        dist = np.atleast_2d(dist)
        for row, a in enumerate(chunk):
            for b in by_source[a]:
                d = dist[row, b]
                out[(a, b)] = int(d) if np.isfinite(d) else UNREACHABLE
    return out


def spanner_stretch(g: UnweightedGraph, h: UnweightedGraph) -> StretchReport:
    """
    Max over edges (u, v) of g of d_h(u, v).

    By the triangle inequality this equals the all-pairs stretch, so only the
    endpoints of g's edges are queried.
    """
    _check_same_n(g.n, h.n)
    check_subgraph(g, h.edges)
    if g.m == 0:
        return StretchReport(max_stretch=1, witness_edge=None)

    dist = pair_distances(h, g.sorted_edges)
    worst: float = 0
    witness: Optional[Edge] = None
    for e in g.sorted_edges:
        d = dist[e]
        if d > worst:
            worst, witness = d, e
    return StretchReport(max_stretch=worst, witness_edge=witness)


def all_pairs_stretch(g: UnweightedGraph, h: UnweightedGraph) -> float:
    """Brute-force max of d_h/d_g over connected pairs of g (small n only)."""
    _check_same_n(g.n, h.n)
    if g.n == 0 or g.m == 0:
        return 1.0
    dg = csgraph.shortest_path(g.csr(), directed=False, unweighted=True)
    dh = csgraph.shortest_path(h.csr(), directed=False, unweighted=True)
    mask = np.isfinite(dg) & (dg > 0)
    ratios = dh[mask] / dg[mask]
    return float(ratios.max())


# ──────────────────────────────────────────────────────────────────────────────
# Effective resistance
# ──────────────────────────────────────────────────────────────────────────────

class ResistanceOracle:
    """
    Effective resistances of one graph.

    Up to ``dense_limit`` vertices each connected component is inverted once
    as ``(L_c + J/n_c)^-1``, which agrees with the pseudoinverse on vectors
    orthogonal to the all-ones vector. Larger graphs solve each query with
    Jacobi-preconditioned conjugate gradients.
    """

    def __init__(self, g: AnyGraph, *, dense_limit: int = DENSE_SOLVE_LIMIT, tol: float = CG_TOLERANCE):
        self.graph = as_weighted(g)
        self.n = g.n
        self.tol = tol
        self.dense = g.n <= dense_limit
        self._laplacian = self.graph.laplacian()

        if self.n:
            _, labels = csgraph.connected_components(self.graph.csr(), directed=False)
        else:
            labels = np.zeros(0, dtype=np.int64)
        self._labels = labels
        self._position = np.zeros(self.n, dtype=np.int64)
        self._members: Dict[int, np.ndarray] = {}
        order = np.argsort(labels, kind="stable")
        comps, starts = np.unique(labels[order], return_index=True)
        bounds = list(starts) + [self.n]
        for idx, comp in enumerate(comps):
            members = order[bounds[idx]:bounds[idx + 1]]
            self._members[int(comp)] = members
            self._position[members] = np.arange(len(members))

        self._inverse: Dict[int, np.ndarray] = {}
        self._block: Dict[int, sp.csr_matrix] = {}
        if self.dense:
            for comp, members in self._members.items():
                if len(members) < 2:
                    continue
                block = self._laplacian[members][:, members].toarray()
                self._inverse[comp] = np.linalg.inv(block + 1.0 / len(members))
        logger.debug("resistance oracle n=%d components=%d dense=%s", self.n, len(self._members), self.dense)

    @property
    def components(self) -> int:
        return len(self._members)

    def same_component(self, u: int, v: int) -> bool:
        return self._labels[u] == self._labels[v]

    def resistance(self, u: int, v: int) -> float:
        _check_vertex(self.n, u)
        _check_vertex(self.n, v)
        if u == v:
            return 0.0
        if not self.same_component(u, v):
            return INFINITE_RESISTANCE
        comp = int(self._labels[u])
        pu, pv = int(self._position[u]), int(self._position[v])
        if self.dense:
            inv = self._inverse[comp]
            return float(inv[pu, pu] + inv[pv, pv] - 2.0 * inv[pu, pv])
        return self._solve(comp, pu, pv)

    def _solve(self, comp: int, pu: int, pv: int) -> float:
        block = self._block.get(comp)
        if block is None:
            members = self._members[comp]
            block = self._laplacian[members][:, members].tocsr()
            self._block[comp] = block
        size = block.shape[0]
        rhs = np.zeros(size)
        rhs[pu], rhs[pv] = 1.0, -1.0
        diag = block.diagonal()
        precond = LinearOperator(block.shape, matvec=lambda x: x / diag)
        x, info = cg(block, rhs, rtol=self.tol, atol=0.0, M=precond, maxiter=10 * size)
        if info != 0:
            logger.warning("CG did not converge (info=%d) for component of size %d", info, size)
        return float(rhs @ x)

    def edge_resistances(self, edges: Optional[Sequence[Edge]] = None) -> np.ndarray:
        """Resistances for ``edges`` (default: the graph's sorted edges)."""
        edges = self.graph.sorted_edges if edges is None else edges
        if not edges:
            return np.zeros(0)
        arr = np.asarray(edges, dtype=np.int64)
        if not self.dense:
            return np.array([self.resistance(int(a), int(b)) for a, b in arr])

        out = np.full(len(arr), INFINITE_RESISTANCE)
        lu, lv = self._labels[arr[:, 0]], self._labels[arr[:, 1]]
        pu, pv = self._position[arr[:, 0]], self._position[arr[:, 1]]
        out[arr[:, 0] == arr[:, 1]] = 0.0
        for comp, inv in self._inverse.items():
            sel = (lu == comp) & (lv == comp) & (arr[:, 0] != arr[:, 1])
            if sel.any():
                a, b = pu[sel], pv[sel]
                out[sel] = inv[a, a] + inv[b, b] - 2.0 * inv[a, b]
        return out


def effective_resistance(g: AnyGraph, u: int, v: int) -> float:
    return ResistanceOracle(g).resistance(u, v)


def sum_weighted_resistances(g: AnyGraph) -> float:
    """Σ w_e·R_e; equals n minus the number of components."""
    wg = as_weighted(g)
    if wg.m == 0:
        return 0.0
    resist = ResistanceOracle(wg).edge_resistances()
    return float(np.dot(wg.weight_array(), resist))


# ──────────────────────────────────────────────────────────────────────────────
# Cuts
# ──────────────────────────────────────────────────────────────────────────────

def cut_weight(g: AnyGraph, S: Iterable[int]) -> float:
    wg = as_weighted(g)
    mask = np.zeros(wg.n, dtype=bool)
    for v in S:
        _check_vertex(wg.n, v)
        mask[v] = True
    if wg.m == 0:
        return 0.0
    arr = np.asarray(wg.sorted_edges, dtype=np.int64)
    crossing = mask[arr[:, 0]] != mask[arr[:, 1]]
    return float(wg.weight_array()[crossing].sum())


@dataclass(frozen=True)
class LayerCutReport:
    source: int
    eps: float
    layer_sizes: Tuple[int, ...]
    w_g: Tuple[float, ...]
    w_h: Tuple[float, ...]
    violations: Tuple[int, ...]

    @property
    def clean(self) -> bool:
        return not self.violations


def layer_cut_check(g: UnweightedGraph, h: WeightedGraph, src: int, eps: float) -> LayerCutReport:
    """
    Compare consecutive-layer cut weights of g and h, layers being the BFS
    layers of unweight(h) from ``src``. Vertices unweight(h) cannot reach
    form one extra final layer. Layer i is flagged when
    |W_i^G - W_i^H| exceeds eps * (W_{i-1}^H + W_i^H + W_{i+1}^H).
    """
    _check_same_n(g.n, h.n)
    hu = h.unweighted()
    check_subgraph(g, hu.edges)
    dist = bfs_distances(hu, src).dist
    reached = [int(d) for d in dist if math.isfinite(d)]
    depth = max(reached) if reached else 0
    if len(reached) < len(dist):
        depth += 1
    layer = [int(d) if math.isfinite(d) else depth for d in dist]
    sizes = [0] * (depth + 1)
    for lv in layer:
        sizes[lv] += 1

    w_g = [0.0] * depth
    w_h = [0.0] * depth
    for a, b in g.sorted_edges:
        la, lb = layer[a], layer[b]
        if abs(la - lb) == 1:
            w_g[min(la, lb)] += 1.0
    for (a, b), w in h.weights.items():
        la, lb = layer[a], layer[b]
        if abs(la - lb) == 1:
            w_h[min(la, lb)] += w

    violations = []
    for i in range(depth):
        around = w_h[i] + (w_h[i - 1] if i > 0 else 0.0) + (w_h[i + 1] if i + 1 < depth else 0.0)
        if abs(w_g[i] - w_h[i]) > eps * around + 1e-9 * max(1.0, w_g[i]):
            violations.append(i)
    return LayerCutReport(
        source=src,
        eps=eps,
        layer_sizes=tuple(sizes),
        w_g=tuple(w_g),
        w_h=tuple(w_h),
        violations=tuple(violations),
    )


# ──────────────────────────────────────────────────────────────────────────────
# Text format: "n <N>" header, one "u v" per line, '#' comments
# ──────────────────────────────────────────────────────────────────────────────

def content_lines(text: str) -> Iterable[Tuple[int, str]]:
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_header(lineno: int, line: str) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != "n" or not parts[1].isdigit():
        raise InputError(f"line {lineno}: expected header 'n <N>', got {line!r}")
    return int(parts[1])


def parse_graph(text: str) -> UnweightedGraph:
    n: Optional[int] = None
    edges: List[Edge] = []
    for lineno, line in content_lines(text):
        if n is None:
            n = parse_header(lineno, line)
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise InputError(f"line {lineno}: non-integer vertex in {line!r}") from None
        _check_vertex(n, u)
        _check_vertex(n, v)
        edges.append(canonical_edge(u, v))
    if n is None:
        raise InputError("missing 'n <N>' header")
    return UnweightedGraph(n, frozenset(edges))


def format_graph(g: UnweightedGraph) -> str:
    lines = [f"n {g.n}"] + [f"{u} {v}" for u, v in g.sorted_edges]
    return "\n".join(lines) + "\n"


def read_graph(path: str | Path) -> UnweightedGraph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def write_graph(g: UnweightedGraph, path: str | Path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(format_graph(g), encoding="utf-8")
