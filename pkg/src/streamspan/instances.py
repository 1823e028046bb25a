"""
streamspan.instances
~~~~~~~~~~~~~~~~~~~~
Seeded graph and stream generators: random graphs, the layered instances
on which resistance sampling drops a short edge, the cut-sparsifier
counterexample, and the permutation-band distribution with a planted swap.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import GenerationError, ParameterError
from .graph import Edge, UnweightedGraph, WeightedGraph, canonical_edge
from .stream import Op, StreamSource, UpdateEvent
from .utils.seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)

SWAP_ATTEMPTS = 100
SEED_RETRIES = 3
CUT_CHUNK = 1024


# ──────────────────────────────────────────────────────────────────────────────
# Basic families
# ──────────────────────────────────────────────────────────────────────────────

def gnp(n: int, p: float, seed: int) -> UnweightedGraph:
    if n < 0:
        raise ParameterError(f"negative vertex count {n}")
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"edge probability must lie in [0, 1], got {p}")
    iu, iv = np.triu_indices(n, 1)
    keep = rng_for(seed, "gnp", n).random(len(iu)) < p
    return UnweightedGraph(n, frozenset(zip(iu[keep].tolist(), iv[keep].tolist())))


def cycle_graph(n: int) -> UnweightedGraph:
    if n < 3:
        raise ParameterError(f"a cycle needs at least 3 vertices, got {n}")
    return UnweightedGraph.from_edges(n, ((i, (i + 1) % n) for i in range(n)))


def path_graph(n: int) -> UnweightedGraph:
    return UnweightedGraph.from_edges(n, ((i, i + 1) for i in range(n - 1)))


def complete_graph(n: int) -> UnweightedGraph:
    return UnweightedGraph.from_edges(n, ((i, j) for i in range(n) for j in range(i + 1, n)))


def star_graph(leaves: int, center_last: bool = True) -> UnweightedGraph:
    """K_{1,leaves}; the center is vertex ``leaves`` (or 0)."""
    n = leaves + 1
    center = leaves if center_last else 0
    others = [v for v in range(n) if v != center]
    return UnweightedGraph.from_edges(n, ((center, v) for v in others))


# ──────────────────────────────────────────────────────────────────────────────
# Layered instances
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class LayeredInstance:
    """
    u, then N layers of a vertices each, then v. Consecutive layers are
    complete bipartite, u and v attach to the first and last layer, and the
    shortcut (u, v) closes the loop.
    """
    a: int
    N: int
    graph: UnweightedGraph
    u: int
    v: int

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def shortcut(self) -> Edge:
        return canonical_edge(self.u, self.v)

    def layer(self, i: int) -> range:
        start = 1 + i * self.a
        return range(start, start + self.a)

    def expected_edges(self) -> int:
        return 2 * self.a + (self.N - 1) * self.a ** 2 + 1

    def shortcut_resistance(self) -> float:
        """(2a + N - 1) / (a² + 2a + N - 1)."""
        a, N = self.a, self.N
        return (2 * a + N - 1) / (a * a + 2 * a + N - 1)

    def without_shortcut(self) -> UnweightedGraph:
        return self.graph.without([self.shortcut])


def layered_custom(a: int, N: int) -> LayeredInstance:
    if a < 1 or N < 1:
        raise ParameterError(f"layer width and count must be positive, got a={a}, N={N}")
    u, v = 0, 1 + a * N
    layers = [list(range(1 + i * a, 1 + (i + 1) * a)) for i in range(N)]
    edges: List[Edge] = [(u, x) for x in layers[0]]
    for left, right in zip(layers, layers[1:]):
        edges.extend((x, y) for x in left for y in right)
    edges.extend((x, v) for x in layers[-1])
    edges.append((u, v))
    return LayeredInstance(a, N, UnweightedGraph(v + 1, frozenset(edges)), u, v)


def layered_instance(n: int) -> LayeredInstance:
    """a = ⌈c·n^{1/3}⌉ and N = ⌈n^{2/3}/c⌉ with c = log₂ n."""
    if n < 2:
        raise ParameterError(f"layered instance needs n ≥ 2, got {n}")
    c = math.log2(n)
    a = math.ceil(c * n ** (1.0 / 3.0))
    N = math.ceil(n ** (2.0 / 3.0) / c)
    if a < 2 or N < 2:
        raise ParameterError(f"n={n} too small for a layered instance (a={a}, N={N})")
    return layered_custom(a, N)


def cut_bad_instance(n: int) -> LayeredInstance:
    """Layered instance with a = ⌈log₂ n⌉ wide layers and N = ⌈n/a⌉ of them."""
    if n < 4:
        raise ParameterError(f"cut-bad instance needs n ≥ 4, got {n}")
    a = math.ceil(math.log2(n))
    N = math.ceil(n / a)
    if a < 2 or N < 2:
        raise ParameterError(f"n={n} too small for a cut-bad instance (a={a}, N={N})")
    return layered_custom(a, N)


def cut_bad_sparsifier(inst: LayeredInstance) -> Tuple[WeightedGraph, float]:
    """
    Every edge except the shortcut, weighted 1 + 1/a.

    Any cut crosses either zero layered edges or at least a of them, so every
    cut ratio lies in [1, 1 + 1/a]; returns the sparsifier and eps = 1/a.
    """
    factor = 1.0 + 1.0 / inst.a
    weights = {e: factor for e in inst.graph.edges if e != inst.shortcut}
    return WeightedGraph(inst.n, weights), 1.0 / inst.a


@dataclass(frozen=True)
class CutScan:
    ratios: np.ndarray
    skipped: int

    @property
    def min_ratio(self) -> float:
        return float(self.ratios.min()) if self.ratios.size else 1.0

    @property
    def max_ratio(self) -> float:
        return float(self.ratios.max()) if self.ratios.size else 1.0

    def within(self, eps: float) -> bool:
        return bool(np.all(np.abs(self.ratios - 1.0) <= eps + 1e-12))


def cut_scan(g: UnweightedGraph, h: WeightedGraph, cuts: int, seed: int) -> CutScan:
    """cut_h(S)/cut_g(S) over ``cuts`` uniformly random vertex sets S."""
    if g.n != h.n:
        raise ParameterError(f"vertex counts differ: {g.n} vs {h.n}")
    rng = rng_for(seed, "cut-scan")
    ge = np.asarray(g.sorted_edges, dtype=np.int64).reshape(-1, 2)
    he = np.asarray(h.sorted_edges, dtype=np.int64).reshape(-1, 2)
    hw = h.weight_array()
    ratios: List[np.ndarray] = []
    skipped = 0
    for start in range(0, cuts, CUT_CHUNK):
        size = min(CUT_CHUNK, cuts - start)
        side = rng.random((size, g.n)) < 0.5
        w_g = (side[:, ge[:, 0]] != side[:, ge[:, 1]]).sum(axis=1).astype(float)
        w_h = (side[:, he[:, 0]] != side[:, he[:, 1]]) @ hw if len(he) else np.zeros(size)
        live = w_g > 0
        skipped += int((~live).sum())
        ratios.append(w_h[live] / w_g[live])
    return CutScan(np.concatenate(ratios) if ratios else np.zeros(0), skipped)


# ──────────────────────────────────────────────────────────────────────────────
# Permutation band with a planted swap
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class HardInstance:
    graph: UnweightedGraph
    d: int
    permutation: Tuple[int, ...]
    removed: Tuple[Edge, Edge]
    planted: Tuple[Edge, Edge]
    seed: int

    @property
    def candidate_pairs(self) -> int:
        return self.graph.n * self.d

    def unplanted(self) -> UnweightedGraph:
        return self.graph.without(self.planted)


def _band(n: int, d: int, seed: int) -> Tuple[np.ndarray, List[Edge]]:
    rng = rng_for(seed, "hard-band")
    perm = rng.permutation(n)
    offsets = np.arange(1, d + 1)
    left = np.repeat(np.arange(n), d)
    right = (left + np.tile(offsets, n)) % n
    keep = rng.random(len(left)) < 0.5
    edges = sorted({canonical_edge(perm[i], perm[j]) for i, j in zip(left[keep], right[keep])})
    return perm, edges


def _swap(edges: List[Edge], seed: int):
    present = set(edges)
    rng = rng_for(seed, "hard-swap")
    for _ in range(SWAP_ATTEMPTS):
        i, j = rng.choice(len(edges), size=2, replace=False)
        (a, b), (c, d) = edges[i], edges[j]
        if len({a, b, c, d}) < 4:
            continue
        new1, new2 = canonical_edge(a, c), canonical_edge(b, d)
        if new1 in present or new2 in present:
            continue
        return (edges[i], edges[j]), (new1, new2)
    return None


def conjectured_hard(n: int, d: int, seed: int) -> HardInstance:
    """
    Random permutation π of [n]; each pair (π(i), π(i+δ mod n)) with
    1 ≤ δ ≤ d is kept with probability 1/2; then two kept edges (a, b),
    (c, d) are swapped for (a, c), (b, d).
    """
    if not 1 < d < n / 4:
        raise ParameterError(f"band width must satisfy 1 < d < n/4, got d={d}, n={n}")
    for attempt in range(SEED_RETRIES + 1):
        current = seed if attempt == 0 else derive_seed(seed, "hard-retry", attempt)
        perm, edges = _band(n, d, current)
        if len(edges) >= 2:
            swapped = _swap(edges, current)
            if swapped is not None:
                removed, planted = swapped
                final = (set(edges) - set(removed)) | set(planted)
                return HardInstance(
                    graph=UnweightedGraph(n, frozenset(final)),
                    d=d,
                    permutation=tuple(int(x) for x in perm),
                    removed=removed,
                    planted=planted,
                    seed=current,
                )
        logger.warning("planted swap failed for seed %d (attempt %d)", current, attempt)
    raise GenerationError(f"could not plant a swap for n={n}, d={d} after {SEED_RETRIES} reseeds")


# ──────────────────────────────────────────────────────────────────────────────
# Streams
# ──────────────────────────────────────────────────────────────────────────────

def to_stream(g: UnweightedGraph, deletion_ratio: float, seed: int) -> StreamSource:
    """
    Random-order insert stream of g with round(deletion_ratio·|E|) decoy
    insert/delete pairs on distinct vertex pairs. A decoy on a real edge is
    inserted and deleted before the real insert.
    """
    if not 0.0 <= deletion_ratio < 1.0:
        raise ParameterError(f"deletion ratio must lie in [0, 1), got {deletion_ratio}")
    rng = rng_for(seed, "to-stream")
    decoys = int(round(deletion_ratio * g.m))
    timeline: List[Tuple[float, int, UpdateEvent]] = []
    seq = 0

    def push(t: float, op: Op, e: Edge) -> None:
        nonlocal seq
        timeline.append((t, seq, UpdateEvent(op, e)))
        seq += 1

    decoy_edges = set()
    if decoys:
        iu, iv = np.triu_indices(g.n, 1)
        picks = rng.choice(len(iu), size=decoys, replace=False)
        for k in np.sort(picks):
            e = (int(iu[k]), int(iv[k]))
            decoy_edges.add(e)
            if e in g.edges:
                t1, t2, t3 = np.sort(rng.random(3))
                push(t1, Op.INSERT, e)
                push(t2, Op.DELETE, e)
                push(t3, Op.INSERT, e)
            else:
                t1, t2 = np.sort(rng.random(2))
                push(t1, Op.INSERT, e)
                push(t2, Op.DELETE, e)
    for e in g.sorted_edges:
        if e not in decoy_edges:
            push(float(rng.random()), Op.INSERT, e)

    timeline.sort(key=lambda item: (item[0], item[1]))
    return StreamSource(g.n, (ev for _, _, ev in timeline))
