"""
streamspan.multipass
~~~~~~~~~~~~~~~~~~~~
Multi-pass clustering spanners over dynamic streams.

Two clustering procedures run on a contracted view of the stream:

  - ``bs_clustering``: one pass per level; a vertex whose cluster is not
    sampled joins an adjacent sampled cluster, or else keeps one edge to
    every adjacent cluster and leaves the partition.
  - ``kw_clustering``: all levels are sampled in one pass and resolved
    offline; clusters that cannot join the next level become terminal and
    recover one edge to every neighbor in a second pass.

``baswana_sen`` and ``kapralov_woodruff`` run one clustering with an empty
top level. ``recursive_spanner`` alternates clustering and contraction g
times, then keeps one edge per pair of surviving clusters.

All sketches live on the base pair space ``u*n + v``, so every recovered
super-edge comes with a representative base edge.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import BudgetExceeded, ParameterError
from .graph import Edge, UnweightedGraph, pair_from_index, pair_index
from .report import SpannerResult
from .sketches import (
    EdgeProbeSketch,
    Outcome,
    SketchOptions,
    SketchSeed,
    SubsetSketch,
)
from .stream import PassScheduler, StreamSource, UpdateEvent
from .utils.seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)

KW = "kw"
BS = "bs"
SCHEMES = (KW, BS)

NEIGHBOR_BUDGET_FACTOR = 8
_ROOT_GUARD = 1e-12


# ──────────────────────────────────────────────────────────────────────────────
# Views and partitions
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SuperGraphView:
    """
    The stream seen through a contraction: base vertex → super vertex id
    (or -1 when unclustered). Intra-cluster edges and edges touching an
    unclustered vertex are dropped.
    """
    source: StreamSource
    cluster_of: Tuple[int, ...]
    members: Tuple[FrozenSet[int], ...]

    @classmethod
    def identity(cls, source: StreamSource) -> "SuperGraphView":
        n = source.n
        return cls(source, tuple(range(n)), tuple(frozenset((v,)) for v in range(n)))

    @classmethod
    def contract(cls, source: StreamSource, clusters: Sequence[FrozenSet[int]]) -> "SuperGraphView":
        cluster_of = [-1] * source.n
        for idx, cluster in enumerate(clusters):
            for v in cluster:
                if cluster_of[v] != -1:
                    raise ParameterError(f"vertex {v} lies in two clusters")
                cluster_of[v] = idx
        return cls(source, tuple(cluster_of), tuple(frozenset(c) for c in clusters))

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def size(self) -> int:
        return len(self.members)

    def translate(self, ev: UpdateEvent) -> Optional[Tuple[int, int]]:
        x, y = self.cluster_of[ev.edge[0]], self.cluster_of[ev.edge[1]]
        if x < 0 or y < 0 or x == y:
            return None
        return x, y

    def super_edge(self, edge: Edge) -> Tuple[int, int]:
        return self.cluster_of[edge[0]], self.cluster_of[edge[1]]

    def base_members(self, supers: Sequence[int]) -> FrozenSet[int]:
        out: Set[int] = set()
        for x in supers:
            out |= self.members[x]
        return frozenset(out)


@dataclass(frozen=True)
class PartialPartition:
    """Disjoint clusters of super vertices, each with a designated center."""
    level: int
    centers: Tuple[int, ...]
    clusters: Tuple[Tuple[int, ...], ...]
    base_clusters: Tuple[FrozenSet[int], ...]

    def __len__(self) -> int:
        return len(self.clusters)


@dataclass
class ClusteringResult:
    partition: PartialPartition
    h: UnweightedGraph
    passes: int
    retries: int
    peak_words: int
    terminal: int = 0


def expected_cluster_count(n: int, p: float, i: int) -> Tuple[float, float]:
    """Mean and variance of Binomial(n, p^i)."""
    q = p ** i
    return n * q, n * q * (1.0 - q)


def _sample_levels(size: int, p: float, levels: int, seed: int, empty_top: bool) -> List[FrozenSet[int]]:
    """Nested N_0 = V ⊇ N_1 ⊇ ... ⊇ N_levels; N_levels = ∅ when ``empty_top``."""
    rng = rng_for(seed, "centers", size, levels)
    alive = np.ones(size, dtype=bool)
    out = [frozenset(range(size))]
    for j in range(1, levels + 1):
        alive &= rng.random(size) < p
        out.append(frozenset() if (empty_top and j == levels) else frozenset(np.flatnonzero(alive).tolist()))
    return out


def _branch(seed: SketchSeed, *labels) -> SketchSeed:
    return SketchSeed(seed.seed, derive_seed(seed.lineage, *labels))


def _neighbor_budget(n: int, inv_rate: float, parts: int) -> int:
    return max(1, min(math.ceil(NEIGHBOR_BUDGET_FACTOR * inv_rate * math.log(max(n, 2))), parts))


class _OtherSide:
    """part_of for a subset sketch: the part of the endpoint outside ``inside``."""

    def __init__(self, n: int, inside: FrozenSet[int], part_of_vertex: Sequence[int]):
        self.n = n
        self.inside = inside
        self.part_of_vertex = part_of_vertex

    def __call__(self, coord: int) -> int:
        a, b = pair_from_index(coord, self.n)
        return self.part_of_vertex[b if a in self.inside else a]


# ──────────────────────────────────────────────────────────────────────────────
# Pass stages
# ──────────────────────────────────────────────────────────────────────────────

class _Stage:
    words: int = 0

    def __call__(self, ev: UpdateEvent) -> None:
        raise NotImplementedError

    def finish(self):
        raise NotImplementedError


@dataclass
class _BSState:
    center_of: Dict[int, int]
    h: Set[Edge] = field(default_factory=set)


class _BSStep(_Stage):
    """
    One level of the sampled-cluster growth. Every super vertex whose
    cluster center is not sampled keeps an l0 probe towards the sampled
    clusters and a subset sketch over its adjacent clusters.
    """

    def __init__(
        self,
        view: SuperGraphView,
        state: _BSState,
        sampled: FrozenSet[int],
        rate: float,
        seed: SketchSeed,
        options: SketchOptions,
    ):
        self.view = view
        self.state = state
        n = view.n
        clusters: Dict[int, List[int]] = {}
        for x, c in state.center_of.items():
            clusters.setdefault(c, []).append(x)
        self.cluster_ids = {c: i for i, c in enumerate(sorted(clusters))}
        part_of_vertex = [0] * n
        for x, c in state.center_of.items():
            for v in view.members[x]:
                part_of_vertex[v] = self.cluster_ids[c]

        target = view.base_members([x for x, c in state.center_of.items() if c in sampled])
        self.joiners = sorted(x for x, c in state.center_of.items() if c not in sampled)
        budget = _neighbor_budget(n, 1.0 / rate if rate > 0 else n, len(clusters))
        self.probes: Dict[int, EdgeProbeSketch] = {}
        self.adjacent: Dict[int, SubsetSketch] = {}
        for x in self.joiners:
            mine = view.members[x]
            self.probes[x] = EdgeProbeSketch(n, mine, target, seed, reps=options.l0_reps)
            self.adjacent[x] = SubsetSketch(
                max(1, n * n), max(1, len(clusters)), _OtherSide(n, mine, part_of_vertex),
                budget, seed, options.l0_reps, options.sr_rows,
            )
        self.words = sum(p.words for p in self.probes.values()) + sum(s.words for s in self.adjacent.values())

    def _feed(self, x: int, y: int, ev: UpdateEvent) -> None:
        if x not in self.probes or y not in self.state.center_of:
            return
        if self.state.center_of[x] == self.state.center_of[y]:
            return
        self.probes[x].observe(ev.edge, ev.delta)
        self.adjacent[x].update(pair_index(ev.edge, self.view.n), ev.delta)

    def __call__(self, ev: UpdateEvent) -> None:
        pair = self.view.translate(ev)
        if pair is None:
            return
        x, y = pair
        self._feed(x, y, ev)
        self._feed(y, x, ev)

    def finish(self) -> Optional[_BSState]:
        center_of = {x: c for x, c in self.state.center_of.items() if x not in self.probes}
        h = set(self.state.h)
        for x in self.joiners:
            found = self.probes[x].edge_between()
            if found.outcome is Outcome.FAIL:
                return None
            if found.outcome is Outcome.OK:
                y = self.view.super_edge(found.edge)
                other = y[1] if y[0] == x else y[0]
                center_of[x] = self.state.center_of[other]
                h.add(found.edge)
                continue
            rec = self.adjacent[x].recover()
            if rec.outcome is not Outcome.OK:
                return None
            h.update(pair_from_index(c, self.view.n) for c in rec.indices)
        return _BSState(center_of, h)


class _KWSample(_Stage):
    """First pass: per super vertex and level j, an l0 probe towards N_j."""

    def __init__(self, view: SuperGraphView, levels: List[FrozenSet[int]], seed: SketchSeed, options: SketchOptions):
        self.view = view
        self.levels = levels
        n = view.n
        self.targets = [view.base_members(sorted(level)) for level in levels]
        self.seeds = [_branch(seed, "level", j) for j in range(len(levels))]
        self.options = options
        self.probes: Dict[Tuple[int, int], EdgeProbeSketch] = {}
        template = EdgeProbeSketch(n, frozenset(), frozenset(), seed, reps=options.l0_reps)
        nominal = sum(view.size - len(level) for level in levels[1:])
        self.words = nominal * template.words

    def _probe(self, x: int, j: int) -> EdgeProbeSketch:
        key = (x, j)
        probe = self.probes.get(key)
        if probe is None:
            probe = EdgeProbeSketch(
                self.view.n, self.view.members[x], self.targets[j], self.seeds[j], reps=self.options.l0_reps
            )
            self.probes[key] = probe
        return probe

    def __call__(self, ev: UpdateEvent) -> None:
        pair = self.view.translate(ev)
        if pair is None:
            return
        x, y = pair
        for j in range(1, len(self.levels)):
            level = self.levels[j]
            if y in level and x not in level:
                self._probe(x, j).observe(ev.edge, ev.delta)
            if x in level and y not in level:
                self._probe(y, j).observe(ev.edge, ev.delta)

    def finish(self) -> Optional["_KWPlan"]:
        size = self.view.size
        center_of = {x: x for x in range(size)}
        h: Set[Edge] = set()
        terminal: List[Tuple[int, FrozenSet[int]]] = []
        for j in range(1, len(self.levels)):
            level = self.levels[j]
            groups: Dict[int, List[int]] = {}
            for x, c in center_of.items():
                groups.setdefault(c, []).append(x)
            nxt: Dict[int, int] = {}
            for c, xs in sorted(groups.items()):
                if c in level:
                    nxt.update((x, c) for x in xs)
                    continue
                merged = None
                for x in xs:
                    probe = self.probes.get((x, j))
                    if probe is None:
                        continue
                    merged = probe.sketch.copy() if merged is None else merged.merge(probe.sketch)
                found = merged.sample() if merged is not None else None
                if found is None or found.outcome is Outcome.EMPTY:
                    terminal.append((j - 1, frozenset(xs)))
                    continue
                if found.outcome is not Outcome.OK:
                    return None
                edge = pair_from_index(found.index, self.view.n)
                a, b = self.view.super_edge(edge)
                joined = b if a in groups[c] else a
                h.add(edge)
                nxt.update((x, joined) for x in xs)
            center_of = nxt
        return _KWPlan(center_of, h, terminal)


@dataclass
class _KWPlan:
    center_of: Dict[int, int]
    h: Set[Edge]
    terminal: List[Tuple[int, FrozenSet[int]]]


class _KWTerminal(_Stage):
    """Second pass: each terminal cluster recovers one edge per neighboring super vertex."""

    def __init__(self, view: SuperGraphView, plan: _KWPlan, p: float, seed: SketchSeed, options: SketchOptions):
        self.view = view
        n = view.n
        self.owner: Dict[int, int] = {}
        self.sketches: List[SubsetSketch] = []
        for idx, (level, supers) in enumerate(plan.terminal):
            inside = view.base_members(sorted(supers))
            budget = _neighbor_budget(n, p ** -(level + 1) if p > 0 else n, view.size)
            self.sketches.append(SubsetSketch(
                max(1, n * n), max(1, view.size), _OtherSide(n, inside, view.cluster_of),
                budget, seed, options.l0_reps, options.sr_rows,
            ))
            for x in supers:
                self.owner[x] = idx
        self.words = sum(s.words for s in self.sketches)

    def __call__(self, ev: UpdateEvent) -> None:
        pair = self.view.translate(ev)
        if pair is None:
            return
        x, y = pair
        tx, ty = self.owner.get(x), self.owner.get(y)
        if tx == ty:
            return
        coord = pair_index(ev.edge, self.view.n)
        if tx is not None:
            self.sketches[tx].update(coord, ev.delta)
        if ty is not None:
            self.sketches[ty].update(coord, ev.delta)

    def finish(self) -> Optional[Set[Edge]]:
        edges: Set[Edge] = set()
        for sk in self.sketches:
            rec = sk.recover()
            if rec.outcome is not Outcome.OK:
                return None
            edges.update(pair_from_index(c, self.view.n) for c in rec.indices)
        return edges


class _PairSample(_Stage):
    """Final pass: one edge for every pair of clusters, probes created on first touch."""

    def __init__(self, view: SuperGraphView, seed: SketchSeed, options: SketchOptions):
        self.view = view
        self.seed = seed
        self.options = options
        self.probes: Dict[Tuple[int, int], EdgeProbeSketch] = {}
        template = EdgeProbeSketch(view.n, frozenset(), frozenset(), seed, reps=options.l0_reps)
        self.words = view.size * (view.size - 1) // 2 * template.words

    def __call__(self, ev: UpdateEvent) -> None:
        pair = self.view.translate(ev)
        if pair is None:
            return
        key = (min(pair), max(pair))
        probe = self.probes.get(key)
        if probe is None:
            probe = EdgeProbeSketch(
                self.view.n, self.view.members[key[0]], self.view.members[key[1]], self.seed, reps=self.options.l0_reps
            )
            self.probes[key] = probe
        probe.observe(ev.edge, ev.delta)

    def finish(self) -> Optional[Set[Edge]]:
        edges: Set[Edge] = set()
        for key in sorted(self.probes):
            found = self.probes[key].edge_between()
            if found.outcome is Outcome.FAIL:
                return None
            if found.outcome is Outcome.OK:
                edges.add(found.edge)
        return edges


def _run_stages(
    sched: PassScheduler,
    label: str,
    build: Callable[[SketchSeed], Sequence[_Stage]],
    seed: SketchSeed,
    retained: int = 0,
) -> list:
    """One physical pass shared by ``build``'s stages, replayed with fresh sketches on failure."""

    def attempt(number: int):
        stages = build(seed.fresh(number) if number else seed)
        sched.run_pass(*stages, label=label)
        sched.checkpoint(sum(s.words for s in stages) + retained)
        results = [s.finish() for s in stages]
        if any(r is None for r in results):
            return None
        return results

    return sched.with_retries(label, attempt)


# ──────────────────────────────────────────────────────────────────────────────
# Clusterings
# ──────────────────────────────────────────────────────────────────────────────

def _check_rate(p: float) -> None:
    if not 0.0 < p <= 1.0:
        raise ParameterError(f"sampling rate must lie in (0, 1], got {p}")


def _as_view(src) -> SuperGraphView:
    return src if isinstance(src, SuperGraphView) else SuperGraphView.identity(src)


def _partition(view: SuperGraphView, center_of: Dict[int, int], level: int) -> PartialPartition:
    groups: Dict[int, List[int]] = {}
    for x, c in center_of.items():
        groups.setdefault(c, []).append(x)
    centers = tuple(sorted(groups))
    clusters = tuple(tuple(sorted(groups[c])) for c in centers)
    return PartialPartition(level, centers, clusters, tuple(view.base_members(cl) for cl in clusters))


def _bs_run(
    view: SuperGraphView,
    sched: PassScheduler,
    p: float,
    steps: int,
    seed: int,
    options: SketchOptions,
    empty_top: bool,
    label: str,
) -> Tuple[PartialPartition, Set[Edge]]:
    levels = _sample_levels(view.size, p, steps, seed, empty_top)
    state = _BSState({x: x for x in range(view.size)})
    base = SketchSeed.derive(seed, label)
    for j in range(1, steps + 1):
        current = state
        step_seed = _branch(base, "step", j)
        (state,) = _run_stages(
            sched, f"{label} step {j}",
            lambda s, cur=current, lvl=levels[j]: [_BSStep(view, cur, lvl, p, s, options)],
            step_seed,
            retained=2 * len(current.h) + view.n,
        )
        logger.debug("%s step %d: %d clustered, %d edges", label, j, len(state.center_of), len(state.h))
    return _partition(view, state.center_of, steps), state.h


def bs_clustering(
    src,
    p: float,
    i: int,
    seed: int = 0,
    options: SketchOptions = SketchOptions(),
    scheduler: Optional[PassScheduler] = None,
) -> ClusteringResult:
    """
    i levels of sampled-cluster growth, one pass per level. Clusters have
    radius ≤ i around their center in H; every dropped vertex keeps one
    edge to each cluster it was adjacent to.
    """
    _check_rate(p)
    if i < 0:
        raise ParameterError(f"level count must be non-negative, got {i}")
    view = _as_view(src)
    sched = scheduler or PassScheduler(view.source)
    partition, h = _bs_run(view, sched, p, i, seed, options, empty_top=False, label="bs")
    return ClusteringResult(partition, UnweightedGraph(view.n, frozenset(h)), sched.passes_opened, sched.retries, sched.peak_words)


def _kw_run(
    view: SuperGraphView,
    sched: PassScheduler,
    p: float,
    levels_count: int,
    seed: int,
    options: SketchOptions,
    empty_top: bool,
) -> Tuple[PartialPartition, Set[Edge], int]:
    levels = _sample_levels(view.size, p, levels_count, seed, empty_top)
    sample_seed = SketchSeed.derive(seed, "kw-sample")
    (plan,) = _run_stages(sched, "kw sample", lambda s: [_KWSample(view, levels, s, options)], sample_seed)
    (extra,) = _run_stages(
        sched, "kw terminal",
        lambda s: [_KWTerminal(view, plan, p, s, options)],
        SketchSeed.derive(seed, "kw-terminal"),
        retained=2 * len(plan.h) + view.n,
    )
    return _partition(view, plan.center_of, levels_count), plan.h | extra, len(plan.terminal)


def kw_clustering(
    src,
    p: float,
    i: int,
    seed: int = 0,
    options: SketchOptions = SketchOptions(),
    scheduler: Optional[PassScheduler] = None,
) -> ClusteringResult:
    """
    All i levels sampled in one pass and resolved offline; clusters have
    radius ≤ 2^i - 1. Terminal clusters recover an edge to every neighbor
    in a second pass.
    """
    _check_rate(p)
    if i < 0:
        raise ParameterError(f"level count must be non-negative, got {i}")
    view = _as_view(src)
    sched = scheduler or PassScheduler(view.source)
    partition, h, terminal = _kw_run(view, sched, p, i, seed, options, empty_top=False)
    return ClusteringResult(
        partition, UnweightedGraph(view.n, frozenset(h)), sched.passes_opened, sched.retries, sched.peak_words, terminal
    )


# ──────────────────────────────────────────────────────────────────────────────
# Spanners
# ──────────────────────────────────────────────────────────────────────────────

def _check_k(k) -> int:
    if int(k) != k or k < 1:
        raise ParameterError(f"k must be a positive integer, got {k}")
    return int(k)


def baswana_sen(
    src: StreamSource,
    k: int,
    seed: int = 0,
    options: SketchOptions = SketchOptions(),
    max_retries: int = 3,
) -> SpannerResult:
    """(2k-1)-spanner in k passes."""
    k = _check_k(k)
    sched = PassScheduler(src, max_retries)
    view = SuperGraphView.identity(src)
    p = src.n ** (-1.0 / k) if src.n > 1 else 1.0
    _, h = _bs_run(view, sched, p, k, seed, options, empty_top=True, label="bs")
    logger.info("baswana-sen k=%d: %d edges in %d passes", k, len(h), sched.passes_opened)
    return SpannerResult(
        spanner=UnweightedGraph(src.n, frozenset(h)),
        passes=sched.passes_opened,
        retries=sched.retries,
        peak_words=sched.peak_words,
        charging=("exact-sketch",),
    )


def kapralov_woodruff(
    src: StreamSource,
    k: int,
    seed: int = 0,
    options: SketchOptions = SketchOptions(),
    max_retries: int = 3,
) -> SpannerResult:
    """(2^k - 1)-spanner in 2 passes."""
    k = _check_k(k)
    sched = PassScheduler(src, max_retries)
    view = SuperGraphView.identity(src)
    p = src.n ** (-1.0 / k) if src.n > 1 else 1.0
    _, h, terminal = _kw_run(view, sched, p, k, seed, options, empty_top=True)
    logger.info("kapralov-woodruff k=%d: %d edges, %d terminal clusters", k, len(h), terminal)
    return SpannerResult(
        spanner=UnweightedGraph(src.n, frozenset(h)),
        passes=sched.passes_opened,
        retries=sched.retries,
        peak_words=sched.peak_words,
        charging=("exact-sketch",),
        details={"terminal_clusters": terminal},
    )


# ──────────────────────────────────────────────────────────────────────────────
# Recursive contraction
# ──────────────────────────────────────────────────────────────────────────────

def _rational(x: float) -> Fraction:
    return Fraction(x).limit_denominator(10 ** 6)


def ceil_root(q: Fraction, g: int) -> int:
    """Smallest integer c ≥ 1 with c^g ≥ q, exact for rational q."""
    c = max(1, math.floor(float(q) ** (1.0 / g) - _ROOT_GUARD))
    while Fraction(c) ** g < q:
        c += 1
    while c > 1 and Fraction(c - 1) ** g >= q:
        c -= 1
    return c


@dataclass(frozen=True)
class RecursionParams:
    k: float
    g: int
    r: int

    @classmethod
    def from_k(cls, k: float, g: int, n: Optional[int] = None) -> "RecursionParams":
        if k < 1:
            raise ParameterError(f"k must be at least 1, got {k}")
        if n is not None and n >= 2 and k > math.log2(n) + _ROOT_GUARD:
            raise ParameterError(f"k must not exceed log2(n) = {math.log2(n):.3f}, got {k}")
        g_max = max(1, math.ceil(math.log2(k) - _ROOT_GUARD)) if k > 1 else 1
        if int(g) != g or not 1 <= g <= g_max:
            raise ParameterError(f"g must be an integer in [1, {g_max}], got {g}")
        r = ceil_root((_rational(k) + 1) / 2, int(g)) - 1
        return cls(k=float(k), g=int(g), r=r)

    def d(self, i: int) -> float:
        """d_i = (r+1)^{i-1} / k."""
        return (self.r + 1) ** (i - 1) / self.k

    def d_exact(self, i: int) -> Fraction:
        return Fraction(self.r + 1) ** (i - 1) / _rational(self.k)

    def rate(self, n: int, i: int) -> float:
        return n ** -self.d(i) if n > 1 else 1.0

    def expected_final_clusters(self, n: int) -> float:
        return n ** (1.0 + 1.0 / self.k - self.d(self.g + 1))


def stretch_bound(k: float, g: int, scheme: str) -> int:
    rp = RecursionParams.from_k(k, g).r + 1
    if scheme == KW:
        return 2 * (2 ** rp - 1) ** g - 1
    if scheme == BS:
        return 2 * (2 * rp - 1) ** g - 1
    raise ParameterError(f"unknown scheme {scheme!r}")


def pass_bound(k: float, g: int, scheme: str) -> int:
    params = RecursionParams.from_k(k, g)
    if scheme == KW:
        return params.g + 1
    if scheme == BS:
        return params.g * params.r + 1
    raise ParameterError(f"unknown scheme {scheme!r}")


def _contract(view: SuperGraphView, partition: PartialPartition) -> SuperGraphView:
    return SuperGraphView.contract(view.source, partition.base_clusters)


def _pair_budget_check(n: int, params: RecursionParams, clusters: int) -> None:
    expected = params.expected_final_clusters(n)
    limit = max(4.0 * expected ** 2, n ** (1.0 + 1.0 / params.k))
    if clusters ** 2 > limit:
        raise BudgetExceeded(f"{clusters} final clusters need {clusters ** 2} pair probes, limit {limit:.0f}")


def recursive_spanner(
    src: StreamSource,
    k: float,
    g: int,
    scheme: str = KW,
    seed: int = 0,
    options: SketchOptions = SketchOptions(),
    max_retries: int = 3,
) -> SpannerResult:
    """
    g rounds of clustering (r levels at rate n^{-d_i}) and contraction,
    then one sampled edge per pair of final clusters. KW rounds fuse each
    terminal pass with the next round's sampling pass: g + 1 passes in
    total. BS rounds take r passes each: g·r + 1.
    """
    if scheme not in SCHEMES:
        raise ParameterError(f"unknown scheme {scheme!r}")
    n = src.n
    params = RecursionParams.from_k(k, g, n)
    sched = PassScheduler(src, max_retries)
    view = SuperGraphView.identity(src)
    h: Set[Edge] = set()

    if scheme == BS:
        for i in range(1, params.g + 1):
            partition, edges = _bs_run(view, sched, params.rate(n, i), params.r, _round_seed(seed, i), options, False, f"bs round {i}")
            h |= edges
            view = _contract(view, partition)
        _pair_budget_check(n, params, view.size)
        (extra,) = _run_stages(
            sched, "pairs", lambda s, v=view: [_PairSample(v, s, options)], SketchSeed.derive(seed, "pairs"), 2 * len(h)
        )
        h |= extra
    else:
        edges, final = _recursive_kw(view, sched, params, seed, options)
        h |= edges
        view = final

    logger.info("recursive-%s k=%s g=%d r=%d: %d edges, %d passes", scheme, k, g, params.r, len(h), sched.passes_opened)
    return SpannerResult(
        spanner=UnweightedGraph(n, frozenset(h)),
        passes=sched.passes_opened,
        retries=sched.retries,
        peak_words=sched.peak_words,
        charging=("exact-sketch",),
        details={"r": params.r, "final_clusters": view.size},
    )


def _round_seed(seed: int, i: int) -> int:
    return derive_seed(seed, "round", i)


def _recursive_kw(
    view: SuperGraphView,
    sched: PassScheduler,
    params: RecursionParams,
    seed: int,
    options: SketchOptions,
) -> Tuple[Set[Edge], SuperGraphView]:
    n = view.n
    h: Set[Edge] = set()
    i = 1
    rate = params.rate(n, i)
    levels = _sample_levels(view.size, rate, params.r, _round_seed(seed, i), False)
    (plan,) = _run_stages(
        sched, "kw round 1 sample",
        lambda s, v=view, lv=levels: [_KWSample(v, lv, s, options)],
        SketchSeed.derive(seed, "kw-sample", i),
    )
    while True:
        partition = _partition(view, plan.center_of, params.r)
        nxt = _contract(view, partition)
        h |= plan.h
        cur_view, cur_plan, cur_rate = view, plan, rate
        if i == params.g:
            _pair_budget_check(n, params, nxt.size)
            terminal_edges, pair_edges = _run_stages(
                sched, f"kw round {i} terminal + pairs",
                lambda s, v=cur_view, pl=cur_plan, p=cur_rate, nv=nxt: [
                    _KWTerminal(v, pl, p, s, options), _PairSample(nv, _branch(s, "pairs"), options)
                ],
                SketchSeed.derive(seed, "kw-terminal", i),
                2 * len(h),
            )
            return h | terminal_edges | pair_edges, nxt
        i += 1
        rate = params.rate(n, i)
        levels = _sample_levels(nxt.size, rate, params.r, _round_seed(seed, i), False)
        terminal_edges, plan = _run_stages(
            sched, f"kw round {i - 1} terminal + round {i} sample",
            lambda s, v=cur_view, pl=cur_plan, p=cur_rate, nv=nxt, lv=levels: [
                _KWTerminal(v, pl, p, s, options), _KWSample(nv, lv, _branch(s, "sample"), options)
            ],
            SketchSeed.derive(seed, "kw-terminal", i - 1),
            2 * len(h),
        )
        h |= terminal_edges
        view = nxt
