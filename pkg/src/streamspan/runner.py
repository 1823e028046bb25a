"""
streamspan.runner
~~~~~~~~~~~~~~~~~
Algorithm dispatch, the oracle-checked RunReport and the bench matrix.
"""
from __future__ import annotations

import csv
import itertools
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .config import RootConfig
from .errors import ParameterError
from .graph import UnweightedGraph, spanner_stretch
from .instances import to_stream
from .multipass import BS, KW, baswana_sen, kapralov_woodruff, pass_bound, recursive_spanner, stretch_bound
from .onepass import sparse_tradeoff_spanner, sparsifier_spanner, tradeoff_spanner
from .parser import Family
from .report import RegressionStore, RunReport, SpannerResult, stretch_fields
from .simcomm import dump_transcript, filtering_spanner, low_degree_peeling, scm_tradeoff, t_for_regime
from .sketches import SketchOptions
from .sparsify import SparsifierParams
from .stream import StreamSource
from .utils.jsonlog import append_jsonl
from .utils.seeding import derive_seed

logger = logging.getLogger(__name__)

ALGORITHMS = (
    "sparsifier", "tradeoff", "sparse-tradeoff",
    "bs", "kw", "recursive-kw", "recursive-bs",
    "filtering", "peeling", "scm",
)
REGRESSION_ALGOS = ("sparsifier", "tradeoff", "sparse-tradeoff", "scm")
STRETCH_METRIC = "stretch"
RECURSIVE_SCHEMES = {"recursive-kw": KW, "recursive-bs": BS}

BENCH_COLUMNS = [
    "algo", "family", "seed", "k", "g", "alpha", "t", "rounds", "s", "scheme", "regime",
    "n", "m", "passes", "retries", "spanner_edges", "max_stretch", "declared_bound",
    "peak_words", "max_bits_per_player_per_round", "verified", "wall_ms",
]


@dataclass(frozen=True)
class AlgoParams:
    seed: int = 0
    k: Optional[float] = None
    g: Optional[int] = None
    alpha: Optional[float] = None
    t: Optional[float] = None
    rounds: Optional[int] = None
    s: Optional[int] = None
    regime: Optional[str] = None

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ParameterError(f"missing parameter(s): {', '.join('--' + n for n in missing)}")

    def public(self) -> Dict[str, object]:
        return {k: v for k, v in asdict(self).items() if v is not None}


def _sparsifier_params(cfg: RootConfig, seed: int) -> SparsifierParams:
    return SparsifierParams(eps=cfg.sparsify.eps, oversample=cfg.sparsify.oversample, seed=seed)


def _options(cfg: RootConfig) -> SketchOptions:
    return SketchOptions(l0_reps=cfg.sketch.l0_reps, sr_rows=cfg.sketch.sr_rows)


def resolve_t(params: AlgoParams, n: int, cfg: RootConfig) -> float:
    if params.t is not None:
        return params.t
    params.require("rounds")
    return t_for_regime(n, params.rounds, params.regime or cfg.filtering.regime, cfg.filtering.resistance_c1)


# ──────────────────────────────────────────────────────────────────────────────
# Dispatch
# ──────────────────────────────────────────────────────────────────────────────

def run_algorithm(
    name: str,
    source: StreamSource,
    params: AlgoParams,
    cfg: Optional[RootConfig] = None,
    transcript: Optional[str | Path] = None,
) -> SpannerResult:
    cfg = cfg or RootConfig()
    seed = params.seed
    sp = _sparsifier_params(cfg, seed)
    options = _options(cfg)
    retries = cfg.sketch.max_retries

    if name == "sparsifier":
        return sparsifier_spanner(source, sp)
    if name == "tradeoff":
        params.require("alpha")
        return tradeoff_spanner(source, params.alpha, sp)
    if name == "sparse-tradeoff":
        params.require("alpha")
        return sparse_tradeoff_spanner(source, params.alpha, sp, options)
    if name == "bs":
        params.require("k")
        return baswana_sen(source, params.k, seed, options, retries)
    if name == "kw":
        params.require("k")
        return kapralov_woodruff(source, params.k, seed, options, retries)
    if name in ("recursive-kw", "recursive-bs"):
        params.require("k", "g")
        scheme = KW if name == "recursive-kw" else BS
        return recursive_spanner(source, params.k, params.g, scheme, seed, options, retries)

    g = source.materialize()
    if name == "filtering":
        params.require("rounds")
        t = resolve_t(params, g.n, cfg)
        res = filtering_spanner(g, t, params.rounds, seed, sp)
        return SpannerResult(
            spanner=res.spanner,
            rounds=res.rounds_used,
            max_bits_per_player_per_round=res.meter.max_bits_per_player_per_round,
            charging=res.meter.charging,
            details={
                "t": t,
                "emptied": res.emptied,
                "surviving": [len(state.surviving) for state in res.history],
            },
        )
    if name == "peeling":
        params.require("s")
        run = low_degree_peeling(g, params.s, seed, cfg.run.workers, options)
        if transcript is not None:
            dump_transcript(run.board, transcript)
        return SpannerResult(
            spanner=run.result.recovered,
            rounds=run.meter.rounds,
            max_bits_per_player_per_round=run.meter.max_bits_per_player_per_round,
            charging=run.meter.charging,
            details={"v1": list(run.result.v1), "v2": sorted(run.result.v2), "replays": run.replays},
        )
    if name == "scm":
        params.require("alpha", "rounds")
        return scm_tradeoff(
            g, params.alpha, params.rounds, seed, sp, options,
            regime=params.regime or cfg.filtering.regime,
            c1=cfg.filtering.resistance_c1,
            workers=cfg.run.workers,
            transcript=transcript,
        )
    raise ParameterError(f"unknown algorithm {name!r} (known: {', '.join(ALGORITHMS)})")


# ──────────────────────────────────────────────────────────────────────────────
# Declared bounds
# ──────────────────────────────────────────────────────────────────────────────

def regression_scale(name: str, n: int, m: int, params: AlgoParams) -> float:
    """The Õ(·) shape each single-pass and SCM regression constant multiplies."""
    log2n = math.log2(max(n, 2))
    if name == "sparsifier":
        return n ** (2.0 / 3.0) * log2n ** 2
    if name in ("tradeoff", "scm"):
        return (n ** (1.0 - params.alpha)) ** (2.0 / 3.0) * log2n ** 2
    if name == "sparse-tradeoff":
        return math.sqrt(max(m, 1)) * n ** -params.alpha * math.log(max(n, 2))
    raise ParameterError(f"{name} has no regression scale")


def declared_bound(
    name: str,
    n: int,
    m: int,
    params: AlgoParams,
    result: SpannerResult,
    store: Optional[RegressionStore] = None,
    family: str = "*",
) -> Optional[float]:
    if name == "bs":
        return 2 * params.k - 1
    if name == "kw":
        return 2 ** params.k - 1
    if name in ("recursive-kw", "recursive-bs"):
        return stretch_bound(params.k, params.g, KW if name == "recursive-kw" else BS)
    if name == "filtering":
        return result.details["t"] if result.details.get("emptied") else None
    if name == "peeling":
        return 1
    if name == "scm" and result.details.get("emptied"):
        return result.details["t"]
    if name in REGRESSION_ALGOS and store is not None:
        return store.limit(family, name, STRETCH_METRIC, regression_scale(name, n, m, params))
    return None


def declared_passes(name: str, params: AlgoParams) -> Optional[int]:
    if name in ("sparsifier", "tradeoff", "sparse-tradeoff"):
        return 1
    if name == "bs":
        return int(params.k)
    if name == "kw":
        return 2
    if name in ("recursive-kw", "recursive-bs"):
        return pass_bound(params.k, params.g, KW if name == "recursive-kw" else BS)
    return None


def _oracle_graph(name: str, g: UnweightedGraph, result: SpannerResult) -> UnweightedGraph:
    """Peeling is judged on the edges incident to the peeled vertices only."""
    if name != "peeling":
        return g
    peeled = set(result.details["v1"])
    return UnweightedGraph(g.n, frozenset(e for e in g.edges if e[0] in peeled or e[1] in peeled))


def execute_with_result(
    name: str,
    source: StreamSource,
    params: AlgoParams,
    family: str = "file",
    cfg: Optional[RootConfig] = None,
    store: Optional[RegressionStore] = None,
    transcript: Optional[str | Path] = None,
) -> Tuple[RunReport, SpannerResult]:
    """Run one algorithm, check its stretch with the exact oracle and build the report."""
    cfg = cfg or RootConfig()
    started = time.perf_counter()
    result = run_algorithm(name, source, params, cfg, transcript)
    wall_ms = (time.perf_counter() - started) * 1000.0

    g = source.materialize()
    stretch = spanner_stretch(_oracle_graph(name, g, result), result.spanner)
    max_stretch, witness = stretch_fields(stretch.max_stretch, stretch.witness_edge)
    bound = declared_bound(name, g.n, g.m, params, result, store, family)
    passes_bound = declared_passes(name, params)
    details = dict(result.details)
    if passes_bound is not None:
        details["declared_passes"] = passes_bound

    report = RunReport(
        algo=name,
        family=family,
        params=params.public(),
        n=g.n,
        m=g.m,
        passes=result.passes,
        retries=result.retries,
        rounds=result.rounds,
        spanner_edges=result.spanner.m,
        max_stretch=max_stretch,
        witness_edge=witness,
        declared_bound=float(bound) if bound is not None else None,
        peak_words=result.peak_words,
        max_bits_per_player_per_round=result.max_bits_per_player_per_round,
        charging=list(result.charging),
        verified=RunReport.judge(max_stretch, bound),
        wall_ms=round(wall_ms, 3),
        details=details,
    )
    logger.info(
        "%s on %s: |H|=%d stretch=%s bound=%s verified=%s",
        name, family, report.spanner_edges, report.max_stretch, report.declared_bound, report.verified,
    )
    if cfg.output.run_log:
        append_jsonl(cfg.output.run_log, {"event": "run", **report.to_dict()})
    return report, result


def execute(
    name: str,
    source: StreamSource,
    params: AlgoParams,
    family: str = "file",
    cfg: Optional[RootConfig] = None,
    store: Optional[RegressionStore] = None,
    transcript: Optional[str | Path] = None,
) -> RunReport:
    return execute_with_result(name, source, params, family, cfg, store, transcript)[0]


# ──────────────────────────────────────────────────────────────────────────────
# Bench
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class BenchCell:
    algo: str
    family: Family
    params: AlgoParams
    deletion_ratio: float = 0.0


def bench_matrix(
    algos: Sequence[str],
    families: Sequence[Family],
    seeds: Sequence[int],
    grid: Dict[str, Sequence],
    deletion_ratio: float = 0.0,
) -> List[BenchCell]:
    """Cartesian product of algorithms, families, seeds and parameter grid values."""
    keys = sorted(grid)
    cells = []
    for algo, family, seed in itertools.product(algos, families, seeds):
        for combo in itertools.product(*(grid[k] for k in keys)):
            params = replace(AlgoParams(seed=seed), **dict(zip(keys, combo)))
            cells.append(BenchCell(algo, family, params, deletion_ratio))
    return cells


def _run_cell(cell: BenchCell, cfg: RootConfig, store: Optional[RegressionStore]) -> Dict[str, object]:
    seed = cell.params.seed
    g = cell.family.build(seed)
    source = to_stream(g, cell.deletion_ratio, derive_seed(seed, "bench-stream"))
    report = execute(cell.algo, source, cell.params, cell.family.spec(), cfg, store)
    row: Dict[str, object] = {k: v for k, v in report.to_dict().items() if k in BENCH_COLUMNS}
    row.update({"family": cell.family.spec(), "seed": seed, "scheme": RECURSIVE_SCHEMES.get(cell.algo, "")})
    row.update(cell.params.public())
    return row


def bench(
    cells: Iterable[BenchCell],
    cfg: Optional[RootConfig] = None,
    store: Optional[RegressionStore] = None,
    csv_path: Optional[str | Path] = None,
    workers: Optional[int] = None,
) -> List[Dict[str, object]]:
    """Run every cell concurrently; rows come back in cell order."""
    cfg = cfg or RootConfig()
    cells = list(cells)
    with ThreadPoolExecutor(max_workers=workers or cfg.run.workers, thread_name_prefix="bench") as pool:
        rows = list(pool.map(lambda c: _run_cell(c, cfg, store), cells))
    if csv_path is not None:
        write_bench_csv(rows, csv_path)
    logger.info("bench: %d cells, %d verified", len(rows), sum(1 for r in rows if r.get("verified")))
    return rows


def write_bench_csv(rows: Sequence[Dict[str, object]], path: str | Path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("w", newline="", encoding="utf-8") as f:
        w = csv.DictWriter(f, fieldnames=BENCH_COLUMNS, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in BENCH_COLUMNS})
