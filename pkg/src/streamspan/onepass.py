"""
streamspan.onepass
~~~~~~~~~~~~~~~~~~
Single-pass spanners built from spectral sparsifiers: the whole-graph
sparsifier, the subset-cover space/stretch tradeoff, and the sparse-graph
tradeoff that adds a sparse-recovery branch.

Every event is routed to all sub-sparsifiers whose vertex subset holds both
endpoints, so all of them share the one pass.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import GenerationError, ParameterError
from .graph import Edge, UnweightedGraph, canonical_edge, pair_from_index, pair_index
from .report import SpannerResult
from .sketches import Outcome, SketchOptions, SketchSeed, SparseRecoverySketch
from .sparsify import SparsifierParams, blackbox_sparsifier_words, spectral_sparsify
from .stream import EdgeCollector, PassScheduler, StreamSource, UpdateEvent
from .utils.seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)

COVER_RETRIES = 8
EXHAUSTIVE_COVER_LIMIT = 500
SAMPLED_COVER_PAIRS = 100_000
_PAIR_CHUNK = 2048


# ──────────────────────────────────────────────────────────────────────────────
# Subset cover
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SubsetCover:
    n: int
    alpha: float
    seed: int
    subsets: Tuple[Tuple[int, ...], ...]
    attempts: int = 1

    @cached_property
    def memberships(self) -> Tuple[frozenset, ...]:
        """Per vertex, the ids of the subsets containing it."""
        owners: List[List[int]] = [[] for _ in range(self.n)]
        for idx, subset in enumerate(self.subsets):
            for v in subset:
                owners[v].append(idx)
        return tuple(frozenset(x) for x in owners)

    def covering(self, u: int, v: int) -> List[int]:
        return sorted(self.memberships[u] & self.memberships[v])

    @property
    def max_size(self) -> int:
        return max((len(s) for s in self.subsets), default=0)


def cover_size(n: int, alpha: float) -> int:
    return math.ceil(2 * n ** (1.0 - alpha))


def cover_count(n: int, alpha: float) -> int:
    return math.ceil(8 * n ** (2.0 * alpha) * math.log(max(n, 2)))


def _membership_matrix(n: int, subsets: Sequence[Sequence[int]]) -> np.ndarray:
    mat = np.zeros((len(subsets), n), dtype=np.float32)
    for idx, subset in enumerate(subsets):
        mat[idx, list(subset)] = 1.0
    return mat


def _covers_all_pairs(n: int, subsets: Sequence[Sequence[int]], seed: int) -> bool:
    if n < 2:
        return True
    mat = _membership_matrix(n, subsets)
    if n <= EXHAUSTIVE_COVER_LIMIT:
        together = mat.T @ mat
        iu, iv = np.triu_indices(n, 1)
        return bool(np.all(together[iu, iv] > 0))
    rng = rng_for(seed, "cover-check")
    us = rng.integers(0, n, size=SAMPLED_COVER_PAIRS)
    vs = rng.integers(0, n - 1, size=SAMPLED_COVER_PAIRS)
    vs = vs + (vs >= us)
    for start in range(0, SAMPLED_COVER_PAIRS, _PAIR_CHUNK):
        a, b = us[start:start + _PAIR_CHUNK], vs[start:start + _PAIR_CHUNK]
        if not np.all((mat[:, a] * mat[:, b]).max(axis=0) > 0):
            return False
    return True


def build_subset_cover(n: int, alpha: float, seed: int) -> SubsetCover:
    """
    ⌈8·n^{2α}·ln n⌉ random subsets of size ⌈2·n^{1-α}⌉, redrawn until every
    vertex pair lies in some subset. When the size reaches n the cover is
    the single subset [n].
    """
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"alpha must lie in [0, 1), got {alpha}")
    size = cover_size(n, alpha)
    if size >= n:
        return SubsetCover(n, alpha, seed, (tuple(range(n)),))
    count = cover_count(n, alpha)
    for attempt in range(COVER_RETRIES):
        current = derive_seed(seed, "cover", attempt)
        rng = rng_for(current, "subsets")
        subsets = tuple(tuple(sorted(int(x) for x in rng.choice(n, size=size, replace=False))) for _ in range(count))
        if _covers_all_pairs(n, subsets, current):
            logger.debug("cover n=%d alpha=%.3g: %d subsets of %d (attempt %d)", n, alpha, count, size, attempt + 1)
            return SubsetCover(n, alpha, seed, subsets, attempt + 1)
        logger.warning("subset cover attempt %d missed a pair; redrawing", attempt + 1)
    raise GenerationError(f"no covering family for n={n}, alpha={alpha} after {COVER_RETRIES} attempts")


# ──────────────────────────────────────────────────────────────────────────────
# Per-subset sparsifiers
# ──────────────────────────────────────────────────────────────────────────────

class _SubsetRouter:
    """Routes each event to the collectors of all subsets containing both endpoints."""

    def __init__(self, n: int, subsets: Sequence[Sequence[int]]):
        self.n = n
        self.subsets = subsets
        owners: List[List[int]] = [[] for _ in range(n)]
        for idx, subset in enumerate(subsets):
            for v in subset:
                owners[v].append(idx)
        self.owners = [frozenset(x) for x in owners]
        self.edges: List[set] = [set() for _ in subsets]

    def __call__(self, ev: UpdateEvent) -> None:
        u, v = ev.edge
        for idx in self.owners[u] & self.owners[v]:
            if ev.delta > 0:
                self.edges[idx].add(ev.edge)
            else:
                self.edges[idx].discard(ev.edge)


def sparsify_induced(
    n: int,
    vertices: Sequence[int],
    edges: Sequence[Edge],
    params: SparsifierParams,
) -> UnweightedGraph:
    """Unweighted sparsifier of the subgraph on ``vertices``, on relabelled ids."""
    if not edges:
        return UnweightedGraph(n)
    local = {v: i for i, v in enumerate(vertices)}
    sub = UnweightedGraph(len(vertices), frozenset(canonical_edge(local[a], local[b]) for a, b in edges))
    h = spectral_sparsify(sub, params)
    return UnweightedGraph(n, frozenset(canonical_edge(vertices[a], vertices[b]) for a, b in h.weights))


def _union_of_sparsifiers(
    n: int,
    subsets: Sequence[Sequence[int]],
    edge_sets: Sequence[set],
    params: SparsifierParams,
) -> UnweightedGraph:
    kept = set()
    for idx, (subset, edges) in enumerate(zip(subsets, edge_sets)):
        local = params.with_seed(derive_seed(params.seed, "sparsify", idx))
        kept |= sparsify_induced(n, list(subset), sorted(edges), local).edges
    return UnweightedGraph(n, frozenset(kept))


def _witnesses(g_edges: Sequence[Edge], owners: Sequence[frozenset]) -> Dict[str, int]:
    log: Dict[str, int] = {}
    for u, v in g_edges:
        common = owners[u] & owners[v]
        log[f"{u}-{v}"] = min(common) if common else -1
    return log


# ──────────────────────────────────────────────────────────────────────────────
# Algorithms
# ──────────────────────────────────────────────────────────────────────────────

def sparsifier_spanner(src: StreamSource, params: Optional[SparsifierParams] = None) -> SpannerResult:
    """Unweighted ε = 1/18 sparsifier of the streamed graph, one pass."""
    params = params or SparsifierParams()
    sched = PassScheduler(src)
    collector = EdgeCollector(src.n)
    sched.run_pass(collector, label="sparsify")
    sched.charge(blackbox_sparsifier_words(src.n, params), "sparsifier")
    local = params.with_seed(derive_seed(params.seed, "sparsify", 0))
    spanner = spectral_sparsify(collector.graph(), local).unweighted()
    logger.info("sparsifier spanner: n=%d, %d edges", src.n, spanner.m)
    return SpannerResult(
        spanner=spanner,
        passes=sched.passes_opened,
        peak_words=sched.peak_words,
        charging=("blackbox-sparsifier",),
    )


def tradeoff_spanner(
    src: StreamSource,
    alpha: float,
    params: Optional[SparsifierParams] = None,
    cover: Optional[SubsetCover] = None,
) -> SpannerResult:
    """
    Union over a subset cover of sparsifier spanners of the induced
    subgraphs. Space is Σ|P_i| sparsifier budgets, about n^{1+α}.
    """
    params = params or SparsifierParams()
    cover = cover or build_subset_cover(src.n, alpha, params.seed)
    sched = PassScheduler(src)
    router = _SubsetRouter(src.n, cover.subsets)
    sched.run_pass(router, label="tradeoff")
    sched.charge(sum(blackbox_sparsifier_words(len(s), params) for s in cover.subsets), "subset-sparsifiers")

    spanner = _union_of_sparsifiers(src.n, cover.subsets, router.edges, params)
    witness = _witnesses(src.materialize().sorted_edges, router.owners)
    logger.info("tradeoff spanner: n=%d alpha=%.3g, %d subsets, %d edges", src.n, alpha, len(cover.subsets), spanner.m)
    return SpannerResult(
        spanner=spanner,
        passes=sched.passes_opened,
        peak_words=sched.peak_words,
        charging=("blackbox-sparsifier",),
        details={"subsets": len(cover.subsets), "subset_size": cover.max_size, "witness": witness},
    )


class _PairRecovery:
    def __init__(self, n: int, budget: int, seed: SketchSeed, options: SketchOptions):
        self.n = n
        self.sketch = SparseRecoverySketch(max(1, n * n), budget, seed, options.sr_rows)

    def __call__(self, ev: UpdateEvent) -> None:
        self.sketch.update(pair_index(ev.edge, self.n), ev.delta)


def sparse_tradeoff_spanner(
    src: StreamSource,
    alpha: float,
    params: Optional[SparsifierParams] = None,
    options: SketchOptions = SketchOptions(),
) -> SpannerResult:
    """
    Both branches in one pass, output is their union:
      (a) sparse recovery of up to ⌈n^{1+α}⌉ edges, all kept when it decodes;
      (b) ⌈8·p⁻²·ln n⌉ random vertex subsets at rate p = n^{-α}, each
          sparsified on its induced subgraph.
    """
    if not 0.0 <= alpha < 1.0:
        raise ParameterError(f"alpha must lie in [0, 1), got {alpha}")
    params = params or SparsifierParams()
    n = src.n
    budget = max(1, math.ceil(n ** (1.0 + alpha)))
    p = n ** -alpha if n > 1 else 1.0
    count = math.ceil(8 * p ** -2 * math.log(max(n, 2)))

    rng = rng_for(params.seed, "sparse-tradeoff-subsets")
    subsets = [tuple(int(v) for v in np.flatnonzero(rng.random(n) < p)) for _ in range(count)]

    sched = PassScheduler(src)
    recovery = _PairRecovery(n, budget, SketchSeed.derive(params.seed, "sparse-tradeoff"), options)
    router = _SubsetRouter(n, subsets)
    sched.run_pass(recovery, router, label="sparse-tradeoff")
    sched.charge(
        recovery.sketch.words + sum(blackbox_sparsifier_words(len(s), params) for s in subsets),
        "recovery+subset-sparsifiers",
    )

    decoded = recovery.sketch.decode()
    kept = set()
    if decoded.outcome is Outcome.OK:
        kept = {pair_from_index(i, n) for i, val in decoded.entries.items() if val == 1}
    spanner = UnweightedGraph(n, frozenset(kept)).union(_union_of_sparsifiers(n, subsets, router.edges, params))
    logger.info("sparse tradeoff: n=%d alpha=%.3g recovery=%s, %d edges", n, alpha, decoded.outcome.value, spanner.m)
    return SpannerResult(
        spanner=spanner,
        passes=sched.passes_opened,
        peak_words=sched.peak_words,
        charging=("exact-sketch", "blackbox-sparsifier"),
        details={"recovery": decoded.outcome.value, "recovered": len(kept), "budget": budget, "subsets": count},
    )
