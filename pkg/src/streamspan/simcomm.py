"""
streamspan.simcomm
~~~~~~~~~~~~~~~~~~
Simultaneous-communication simulator and the protocols that run on it.

Every vertex is a player that sees only its own neighborhood, the shared
seed and the board contents of earlier rounds. Within a round players run
concurrently; their posts land on the board in player order.

Protocols:

  - ``filtering_spanner``: per round, sparsify the surviving edges, add the
    unweighted sparsifier to the public spanner, drop every edge already
    within distance t.
  - ``low_degree_peeling``: one round of degree + sparse-recovery posts,
    then a deterministic peel that every player replays identically.
  - ``scm_tradeoff``: subset-cover protocols with per-player messages of
    about n^α words.
"""
from __future__ import annotations

import base64
import heapq
import logging
import math
import struct
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import FirewallViolation, ParameterError, PeelingFailed
from .graph import Edge, UnweightedGraph, WeightedGraph, canonical_edge, pair_distances
from .onepass import build_subset_cover, sparsify_induced
from .report import SpannerResult
from .sketches import Outcome, SketchOptions, SketchSeed, SparseRecoverySketch
from .sparsify import SparsifierParams, spectral_sparsify
from .utils.jsonlog import write_jsonl
from .utils.seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)

WORD_BITS = 64
DEGREE_BYTES = 8
DEFAULT_WORKERS = 4
LDD_T_CONSTANT = 12.0

EXACT = "exact-sketch"
BLACKBOX = "blackbox-sparsifier"


# ──────────────────────────────────────────────────────────────────────────────
# Board, meter and firewall
# ──────────────────────────────────────────────────────────────────────────────

@dataclass
class Board:
    """Public transcript: ``rounds[r][player]`` is the payload posted in round r."""
    seed: int
    rounds: List[Dict[int, bytes]] = field(default_factory=list)

    def post_round(self, posts: Dict[int, bytes]) -> int:
        self.rounds.append({p: posts[p] for p in sorted(posts)})
        return len(self.rounds) - 1

    def prefix(self, r: int) -> Tuple[Dict[int, bytes], ...]:
        return tuple(self.rounds[:r])

    def rows(self) -> List[dict]:
        out = []
        for r, posts in enumerate(self.rounds):
            for player, payload in posts.items():
                out.append({
                    "round": r,
                    "player": player,
                    "bytes": len(payload),
                    "payload": base64.b64encode(payload).decode("ascii"),
                })
        return out


def dump_transcript(board: Board, path: str | Path) -> int:
    """One JSON line per (round, player); returns the number of lines."""
    return write_jsonl(path, board.rows())


class CommMeter:
    """Bits per (round, player); exact posts and black-box charges are labelled."""

    def __init__(self):
        self.bits: Dict[Tuple[int, int], int] = {}
        self.labels: Set[str] = set()

    def add(self, round_: int, player: int, bits: int, label: str) -> None:
        if bits < 0:
            raise ParameterError(f"negative bit count {bits}")
        key = (round_, player)
        self.bits[key] = self.bits.get(key, 0) + int(bits)
        self.labels.add(label)

    def record_posts(self, round_: int, posts: Dict[int, bytes], label: str = EXACT) -> None:
        for player, payload in posts.items():
            self.add(round_, player, 8 * len(payload), label)

    def charge_blackbox(self, round_: int, players: Sequence[int], words: int, label: str = BLACKBOX) -> None:
        for player in players:
            self.add(round_, player, WORD_BITS * words, label)

    @property
    def max_bits_per_player_per_round(self) -> int:
        return max(self.bits.values(), default=0)

    @property
    def rounds(self) -> int:
        return 1 + max((r for r, _ in self.bits), default=-1)

    def totals(self) -> List[int]:
        out = [0] * self.rounds
        for (r, _), b in self.bits.items():
            out[r] += b
        return out

    @property
    def charging(self) -> Tuple[str, ...]:
        return tuple(sorted(self.labels))


class NeighborhoodVault:
    """
    Holds every player's private neighborhood. Reads are logged; a read of
    another player's neighborhood raises FirewallViolation.
    """

    def __init__(self, g: UnweightedGraph):
        self._adjacency = g.adjacency
        self.access_log: List[Tuple[int, int]] = []
        self._lock = threading.Lock()

    def read(self, reader: int, owner: int) -> Tuple[int, ...]:
        with self._lock:
            self.access_log.append((reader, owner))
        if reader != owner:
            raise FirewallViolation(f"player {reader} tried to read the neighborhood of {owner}")
        return self._adjacency[owner]

    def foreign_reads(self) -> List[Tuple[int, int]]:
        return [(r, o) for r, o in self.access_log if r != o]


@dataclass(frozen=True)
class PlayerView:
    player: int
    seed: int
    board: Tuple[Dict[int, bytes], ...]
    vault: NeighborhoodVault

    def neighbors(self) -> Tuple[int, ...]:
        return self.vault.read(self.player, self.player)

    def read(self, owner: int) -> Tuple[int, ...]:
        return self.vault.read(self.player, owner)


class Simulator:
    """Runs synchronized rounds; each round is a barrier."""

    def __init__(self, g: UnweightedGraph, seed: int, workers: int = DEFAULT_WORKERS, meter: Optional[CommMeter] = None):
        self.n = g.n
        self.vault = NeighborhoodVault(g)
        self.board = Board(seed)
        self.meter = meter or CommMeter()
        self.workers = max(1, workers)

    def round(self, compute: Callable[[PlayerView], bytes], label: str = EXACT) -> Dict[int, bytes]:
        r = len(self.board.rounds)
        prefix = self.board.prefix(r)
        seed = self.board.seed

        def run(player: int) -> bytes:
            return compute(PlayerView(player, seed, prefix, self.vault))

        with ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="player") as pool:
            messages = list(pool.map(run, range(self.n)))
        posts = dict(enumerate(messages))
        self.board.post_round(posts)
        self.meter.record_posts(r, posts, label)
        logger.debug("round %d: %d posts, %d bits max", r, len(posts), 8 * max(map(len, messages), default=0))
        return posts

    def replay(self, fn: Callable[[int], object], players: Optional[Sequence[int]] = None) -> List[object]:
        """Run a local computation for each player concurrently, in player order."""
        players = range(self.n) if players is None else players
        with ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="replay") as pool:
            return list(pool.map(fn, players))


def blackbox_words(n: int) -> int:
    """Õ(1) words charged per player for one black-box sparsifier sketch."""
    return max(1, math.ceil(math.log2(max(n, 2)) ** 2))


# ──────────────────────────────────────────────────────────────────────────────
# Filtering
# ──────────────────────────────────────────────────────────────────────────────

def t_for_regime(n: int, g: int, regime: str = "resistance", c1: float = 4.0) -> float:
    if g < 1:
        raise ParameterError(f"round budget must be at least 1, got {g}")
    if regime == "resistance":
        return c1 * n ** ((g + 1) / (2 * g + 1)) * math.log2(max(n, 2)) ** 2
    if regime == "ldd":
        return LDD_T_CONSTANT * n ** (2.0 / g) * math.log(max(n, 2))
    raise ParameterError(f"unknown regime {regime!r}")


def ldd_phi(n: int, g: int) -> float:
    return n ** (-2.0 / g) / 3.0


@dataclass(frozen=True)
class FilterState:
    round: int
    surviving: FrozenSet[Edge]
    spanner: UnweightedGraph
    t: float
    rounds: int


@dataclass
class FilterResult:
    spanner: UnweightedGraph
    emptied: bool
    history: List[FilterState]
    meter: CommMeter

    @property
    def rounds_used(self) -> int:
        return len(self.history) - 1


def filtering_spanner(
    g: UnweightedGraph,
    t: float,
    rounds: int,
    seed: int = 0,
    params: Optional[SparsifierParams] = None,
    meter: Optional[CommMeter] = None,
    players: Optional[Sequence[int]] = None,
    words: Optional[int] = None,
) -> FilterResult:
    """
    ``history[0]`` is the input state; ``history[i]`` holds E_{i+1} and Ĥ
    after round i. Stops early once no edge survives. ``players`` are the
    vertices charged for each round (default all), ``words`` the per-player
    sparsifier sketch size (default sized for g.n).
    """
    if t < 1:
        raise ParameterError(f"stretch parameter t must be at least 1, got {t}")
    if rounds < 1:
        raise ParameterError(f"round budget must be at least 1, got {rounds}")
    params = params or SparsifierParams()
    meter = meter or CommMeter()
    players = range(g.n) if players is None else players
    words = blackbox_words(g.n) if words is None else words

    surviving = g.edges
    spanner = UnweightedGraph(g.n)
    history = [FilterState(0, surviving, spanner, t, rounds)]
    for i in range(1, rounds + 1):
        if not surviving:
            break
        meter.charge_blackbox(i - 1, players, words)
        local = params.with_seed(derive_seed(params.seed, seed, "filter", i))
        sparsifier = spectral_sparsify(UnweightedGraph(g.n, surviving), local)
        spanner = spanner.union(sparsifier.unweighted())
        dist = pair_distances(spanner, surviving, limit=t)
        surviving = frozenset(e for e in surviving if dist[e] > t)
        history.append(FilterState(i, surviving, spanner, t, rounds))
        logger.debug("filter round %d: |H|=%d, %d edges survive", i, spanner.m, len(surviving))

    emptied = not surviving
    logger.info("filtering t=%.3g: %d rounds, |H|=%d, emptied=%s", t, len(history) - 1, spanner.m, emptied)
    return FilterResult(spanner, emptied, history, meter)


# ──────────────────────────────────────────────────────────────────────────────
# Low-diameter decomposition
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class LDDCertificate:
    radius_bound: int
    max_radius: int
    cut: float
    cut_bound: float

    @property
    def holds(self) -> bool:
        return self.max_radius <= self.radius_bound and self.cut <= self.cut_bound + 1e-9


@dataclass(frozen=True)
class LDDResult:
    centers: Tuple[int, ...]
    clusters: Tuple[FrozenSet[int], ...]
    radii: Tuple[int, ...]
    cut: float
    volume: float
    phi: float

    def cluster_of(self) -> List[int]:
        out = [-1] * sum(len(c) for c in self.clusters)
        for idx, cluster in enumerate(self.clusters):
            for v in cluster:
                out[v] = idx
        return out

    def certificate(self) -> LDDCertificate:
        bound = math.ceil(math.log(max(self.volume, 1.0)) / math.log1p(self.phi))
        return LDDCertificate(bound, max(self.radii, default=0), self.cut, self.phi * self.volume)


def ldd(h: WeightedGraph, phi: float) -> LDDResult:
    """
    Grow a ball from the lowest unassigned vertex until its boundary weight
    drops below φ times its volume (both in the graph still unassigned),
    carve it out, repeat.
    """
    if not 0.0 < phi < 1.0:
        raise ParameterError(f"phi must lie in (0, 1), got {phi}")
    if any(w < 1.0 - 1e-12 for w in h.weights.values()):
        raise ParameterError("ldd needs edge weights of at least 1")
    adj: List[Dict[int, float]] = [{} for _ in range(h.n)]
    for (u, v), w in h.weights.items():
        adj[u][v] = w
        adj[v][u] = w

    alive = np.ones(h.n, dtype=bool)
    centers: List[int] = []
    clusters: List[FrozenSet[int]] = []
    radii: List[int] = []
    cut = 0.0
    for center in range(h.n):
        if not alive[center]:
            continue
        ball = {center}
        frontier = [center]
        radius = 0
        while True:
            boundary = 0.0
            volume = 0.0
            for x in ball:
                for y, w in adj[x].items():
                    if not alive[y]:
                        continue
                    volume += w
                    if y not in ball:
                        boundary += w
            if boundary == 0.0 or boundary < phi * volume:
                break
            nxt = sorted({y for x in frontier for y in adj[x] if alive[y] and y not in ball})
            ball.update(nxt)
            frontier = nxt
            radius += 1
        cut += boundary
        for x in ball:
            alive[x] = False
        centers.append(center)
        clusters.append(frozenset(ball))
        radii.append(radius)
    logger.debug("ldd phi=%.3g: %d clusters, cut %.3g of volume %.3g", phi, len(clusters), cut, h.volume)
    return LDDResult(tuple(centers), tuple(clusters), tuple(radii), cut, h.volume, phi)


# ──────────────────────────────────────────────────────────────────────────────
# Low-degree peeling
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PeelResult:
    v1: Tuple[int, ...]
    v2: FrozenSet[int]
    recovered: UnweightedGraph

    def key(self) -> Tuple:
        return self.v1, tuple(sorted(self.v2)), self.recovered.sorted_edges


def _peel_message(view: PlayerView, seed: SketchSeed, s: int, rows: int, n: int) -> bytes:
    nbrs = view.neighbors()
    sk = SparseRecoverySketch(max(1, n), s, seed, rows)
    for w in nbrs:
        sk.update(w, 1)
    return struct.pack("<q", len(nbrs)) + sk.to_bytes()


def _peel_replay(posts: Dict[int, bytes], n: int, s: int, seed: SketchSeed, rows: int) -> PeelResult:
    """Peel the minimum-index vertex of degree ≤ s until none is left."""
    degree = [0] * n
    sketches: List[SparseRecoverySketch] = []
    for v in range(n):
        payload = posts[v]
        (degree[v],) = struct.unpack("<q", payload[:DEGREE_BYTES])
        sketches.append(SparseRecoverySketch.from_bytes(payload[DEGREE_BYTES:], seed, rows))

    heap = [v for v in range(n) if degree[v] <= s]
    heapq.heapify(heap)
    peeled = [False] * n
    order: List[int] = []
    edges: Set[Edge] = set()
    while heap:
        u = heapq.heappop(heap)
        if peeled[u]:
            continue
        step = len(order)
        res = sketches[u].decode()
        if res.outcome is not Outcome.OK or len(res.entries) != degree[u]:
            raise PeelingFailed(step, u)
        for w, val in res.entries.items():
            if val != 1 or w == u or peeled[w]:
                raise PeelingFailed(step, u)
            edges.add(canonical_edge(u, w))
            sketches[w].update(u, -1)
            degree[w] -= 1
            if degree[w] <= s:
                heapq.heappush(heap, w)
        peeled[u] = True
        order.append(u)
    v2 = frozenset(v for v in range(n) if not peeled[v])
    return PeelResult(tuple(order), v2, UnweightedGraph(n, frozenset(edges)))


@dataclass
class PeelingRun:
    result: PeelResult
    board: Board
    meter: CommMeter
    vault: NeighborhoodVault
    replays: int


def low_degree_peeling(
    g: UnweightedGraph,
    s: int,
    seed: int = 0,
    workers: int = DEFAULT_WORKERS,
    options: SketchOptions = SketchOptions(),
    meter: Optional[CommMeter] = None,
    replay_players: Optional[Sequence[int]] = None,
) -> PeelingRun:
    """
    One round: each player posts its degree and an s-sparse recovery sketch
    of its neighborhood. The peel is replayed by every player in
    ``replay_players`` (default all) and must agree bit for bit.
    """
    if s < 1:
        raise ParameterError(f"sparsity s must be at least 1, got {s}")
    sim = Simulator(g, seed, workers, meter)
    sk_seed = SketchSeed.derive(seed, "peel")
    rows = options.sr_rows
    posts = sim.round(lambda view: _peel_message(view, sk_seed, s, rows, g.n))
    outcomes = sim.replay(lambda _player: _peel_replay(posts, g.n, s, sk_seed, rows), replay_players)
    if not outcomes:
        outcomes = [_peel_replay(posts, g.n, s, sk_seed, rows)]
    first = outcomes[0]
    if any(o.key() != first.key() for o in outcomes[1:]):
        raise RuntimeError("peeling replays disagree across players")
    logger.info("peeling s=%d: |V1|=%d |V2|=%d, %d edges recovered", s, len(first.v1), len(first.v2), first.recovered.m)
    return PeelingRun(first, sim.board, sim.meter, sim.vault, len(outcomes))


def peel_oracle(g: UnweightedGraph, s: int) -> PeelResult:
    """The same peel on the true graph, for comparison."""
    degree = [g.degree(v) for v in range(g.n)]
    heap = [v for v in range(g.n) if degree[v] <= s]
    heapq.heapify(heap)
    peeled = [False] * g.n
    order: List[int] = []
    edges: Set[Edge] = set()
    while heap:
        u = heapq.heappop(heap)
        if peeled[u]:
            continue
        for w in g.adjacency[u]:
            if peeled[w]:
                continue
            edges.add(canonical_edge(u, w))
            degree[w] -= 1
            if degree[w] <= s:
                heapq.heappush(heap, w)
        peeled[u] = True
        order.append(u)
    v2 = frozenset(v for v in range(g.n) if not peeled[v])
    return PeelResult(tuple(order), v2, UnweightedGraph(g.n, frozenset(edges)))


# ──────────────────────────────────────────────────────────────────────────────
# Communication tradeoffs
# ──────────────────────────────────────────────────────────────────────────────

def _cover_sparsifiers(g: UnweightedGraph, subsets, params: SparsifierParams) -> Set[Edge]:
    kept: Set[Edge] = set()
    for idx, subset in enumerate(subsets):
        members = frozenset(subset)
        edges = [e for e in g.sorted_edges if e[0] in members and e[1] in members]
        local = params.with_seed(derive_seed(params.seed, "scm-cover", idx))
        kept |= sparsify_induced(g.n, list(subset), edges, local).edges
    return kept


def _memberships(n: int, subsets) -> List[int]:
    counts = [0] * n
    for subset in subsets:
        for v in subset:
            counts[v] += 1
    return counts


def scm_tradeoff(
    g: UnweightedGraph,
    alpha: float,
    rounds: int,
    seed: int = 0,
    params: Optional[SparsifierParams] = None,
    options: SketchOptions = SketchOptions(),
    regime: str = "resistance",
    c1: float = 4.0,
    workers: int = DEFAULT_WORKERS,
    transcript: Optional[str | Path] = None,
) -> SpannerResult:
    """
    rounds = 1: subset-cover sparsifiers, plus low-degree peeling at
    s = ⌈n^α⌉ and sparsifiers of G[V2] on Bernoulli(n^{-α}) subsets.
    rounds > 1: filtering on every cover subset, t from ``regime``.
    """
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    if rounds < 1:
        raise ParameterError(f"round budget must be at least 1, got {rounds}")
    params = params or SparsifierParams(seed=seed)
    n = g.n
    cover = build_subset_cover(n, alpha, seed)
    meter = CommMeter()
    kept: Set[Edge] = set()
    details: Dict[str, object] = {"subsets": len(cover.subsets), "subset_size": cover.max_size}
    board: Optional[Board] = None

    if rounds == 1:
        counts = _memberships(n, cover.subsets)
        kept |= _cover_sparsifiers(g, cover.subsets, params)

        s = max(1, math.ceil(n ** alpha))
        run = low_degree_peeling(g, s, seed, workers, options, meter, replay_players=range(min(n, workers)))
        board = run.board
        kept |= run.result.recovered.edges
        v2 = run.result.v2

        p = n ** -alpha
        count = math.ceil(8 * p ** -2 * math.log(max(n, 2)))
        rng = rng_for(seed, "scm-v2-subsets")
        draws = [tuple(int(v) for v in np.flatnonzero(rng.random(n) < p)) for _ in range(count)]
        for v, c in enumerate(_memberships(n, draws)):
            counts[v] += c
        if v2:
            kept |= _cover_sparsifiers(g, [tuple(v for v in d if v in v2) for d in draws], params.with_seed(derive_seed(params.seed, "v2")))
        for v in range(n):
            meter.add(0, v, WORD_BITS * counts[v] * blackbox_words(max(cover.max_size, 2)), BLACKBOX)

        sub = g.induced(v2)
        details.update({
            "s": s,
            "v1": len(run.result.v1),
            "v2": len(v2),
            "v2_edges": sub.m,
            "v2_min_degree": min((sub.degree(v) for v in v2), default=None),
            "v2_subsets": count,
        })
    else:
        t = 0.0
        used = 0
        emptied = True
        for idx, subset in enumerate(cover.subsets):
            members = frozenset(subset)
            local_g = UnweightedGraph(n, frozenset(e for e in g.edges if e[0] in members and e[1] in members))
            t = t_for_regime(len(subset), rounds, regime, c1)
            res = filtering_spanner(
                local_g, t, rounds, derive_seed(seed, "scm-filter", idx),
                params, meter=meter, players=subset, words=blackbox_words(len(subset)),
            )
            kept |= res.spanner.edges
            used = max(used, res.rounds_used)
            emptied = emptied and res.emptied
        details.update({"t": t, "emptied": emptied, "rounds_used": used})

    if transcript is not None and board is not None:
        dump_transcript(board, transcript)
    spanner = UnweightedGraph(n, frozenset(kept))
    logger.info("scm tradeoff alpha=%.3g rounds=%d: %d edges, %d bits max", alpha, rounds, spanner.m, meter.max_bits_per_player_per_round)
    return SpannerResult(
        spanner=spanner,
        rounds=meter.rounds,
        max_bits_per_player_per_round=meter.max_bits_per_player_per_round,
        charging=meter.charging,
        details=details,
    )
