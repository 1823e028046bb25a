"""
streamspan.main
~~~~~~~~~~~~~~~
Entry point.

  - gen     write a generated graph as an insert/delete stream
  - run     run one algorithm, print its RunReport as JSON
  - verify  recompute the stretch of a saved spanner
  - bench   sweep a parameter matrix, write CSV

Exit codes: 2 for bad input or parameters, 3 when randomness or a budget
runs out, 0 otherwise.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import RootConfig, load_config
from .errors import BudgetExceeded, GenerationError, InputError, RandomnessExhausted
from .graph import read_graph, spanner_stretch, write_graph
from .instances import to_stream
from .parser import parse_family
from .report import RegressionStore, RunReport, stretch_fields
from .runner import ALGORITHMS, AlgoParams, bench, bench_matrix, execute_with_result
from .stream import StreamSource, format_stream, read_stream, write_stream
from .utils.seeding import derive_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_RANDOMNESS = 3


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def _csv_list(kind):
    def parse(text: str):
        return [kind(tok) for tok in text.split(",") if tok.strip()]
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamspan", description="Spanners from dynamic graph streams")
    parser.add_argument("--config", type=str, default=None, help="YAML config (defaults when omitted)")
    parser.add_argument("--log-level", type=str, default=None, help="Override run.log_level")
    parser.add_argument("--doctor", action="store_true", help="Validate config and environment, then exit")
    sub = parser.add_subparsers(dest="command")

    gen = sub.add_parser("gen", help="Generate a stream file")
    gen.add_argument("--family", required=True, help="e.g. gnp:n=200,p=0.1")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--deletion-ratio", type=float, default=0.0)
    gen.add_argument("--out", type=str, default=None, help="Stream file (stdout when omitted)")
    gen.add_argument("--graph-out", type=str, default=None, help="Also write the final graph")

    run = sub.add_parser("run", help="Run one algorithm")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--stream", type=str, help="Stream file")
    src.add_argument("--family", type=str, help="Generator spec")
    run.add_argument("--algo", required=True, choices=ALGORITHMS)
    run.add_argument("--deletion-ratio", type=float, default=0.0)
    _add_algo_flags(run)
    run.add_argument("--spanner-out", type=str, default=None)
    run.add_argument("--report-out", type=str, default=None)
    run.add_argument("--transcript", type=str, default=None, help="Board dump for peeling / scm")

    ver = sub.add_parser("verify", help="Recompute stretch of a saved spanner")
    inp = ver.add_mutually_exclusive_group(required=True)
    inp.add_argument("--stream", type=str)
    inp.add_argument("--graph", type=str)
    ver.add_argument("--spanner", required=True, type=str)
    ver.add_argument("--report", type=str, default=None, help="RunReport JSON to re-judge")

    b = sub.add_parser("bench", help="Sweep a matrix and write CSV")
    b.add_argument("--algos", type=_csv_list(str), required=True)
    b.add_argument("--families", type=str, required=True, help="Generator specs separated by ';'")
    b.add_argument("--seeds", type=_csv_list(int), default=[0])
    b.add_argument("--k", type=_csv_list(float), default=None)
    b.add_argument("--g", type=_csv_list(int), default=None)
    b.add_argument("--alpha", type=_csv_list(float), default=None)
    b.add_argument("--rounds", type=_csv_list(int), default=None)
    b.add_argument("--s", type=_csv_list(int), default=None)
    b.add_argument("--deletion-ratio", type=float, default=0.0)
    b.add_argument("--workers", type=int, default=None)
    b.add_argument("--out", type=str, required=True)
    return parser


def _add_algo_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--g", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--regime", type=str, default=None, choices=("resistance", "ldd"))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.doctor:
        return _doctor(args.config)
    if args.command is None:
        parser.print_help()
        return EXIT_INPUT

    try:
        cfg = load_config(args.config)
        _configure_logging(args.log_level or cfg.run.log_level)
        if args.command == "gen":
            return _cmd_gen(args, cfg)
        if args.command == "run":
            return _cmd_run(args, cfg)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_bench(args, cfg)
    except (InputError, FileNotFoundError, ValueError) as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RandomnessExhausted, BudgetExceeded, GenerationError) as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RANDOMNESS
    except Exception:
        logger.exception("%s aborted", args.command)
        raise


# ── Subcommands ──────────────────────────────────────────────────────────────

def _seed(args, cfg: RootConfig) -> int:
    return cfg.run.seed if args.seed is None else args.seed


def _source_from_family(spec: str, seed: int, deletion_ratio: float) -> StreamSource:
    g = parse_family(spec).build(seed)
    return to_stream(g, deletion_ratio, derive_seed(seed, "bench-stream"))


def _cmd_gen(args, cfg: RootConfig) -> int:
    seed = _seed(args, cfg)
    src = _source_from_family(args.family, seed, args.deletion_ratio)
    if args.out:
        write_stream(src, args.out)
        logger.info("wrote %d events (n=%d) to %s", len(src), src.n, args.out)
    else:
        sys.stdout.write(format_stream(src))
    if args.graph_out:
        write_graph(src.materialize(), args.graph_out)
    return EXIT_OK


def _cmd_run(args, cfg: RootConfig) -> int:
    seed = _seed(args, cfg)
    if args.stream:
        source, family = read_stream(args.stream), "file"
    else:
        family = parse_family(args.family).spec()
        source = _source_from_family(args.family, seed, args.deletion_ratio)

    params = AlgoParams(
        seed=seed, k=args.k, g=args.g, alpha=args.alpha, t=args.t,
        rounds=args.rounds, s=args.s, regime=args.regime,
    )
    store = RegressionStore.load(cfg.regression.path)
    transcript = args.transcript
    if transcript is None and cfg.output.transcript_dir and args.algo in ("peeling", "scm"):
        transcript = str(Path(cfg.output.transcript_dir) / f"{args.algo}-{seed}.jsonl")

    report, result = execute_with_result(args.algo, source, params, family, cfg, store, transcript)
    if args.spanner_out:
        write_graph(result.spanner, args.spanner_out)

    text = report.to_json()
    print(text)
    if args.report_out:
        Path(args.report_out).write_text(text + "\n", encoding="utf-8")
    return EXIT_OK


def _cmd_verify(args) -> int:
    g = read_stream(args.stream).materialize() if args.stream else read_graph(args.graph)
    h = read_graph(args.spanner)
    stretch = spanner_stretch(g, h)
    max_stretch, witness = stretch_fields(stretch.max_stretch, stretch.witness_edge)

    if args.report:
        report = RunReport.from_json(Path(args.report).read_text(encoding="utf-8"))
        report.max_stretch = max_stretch
        report.witness_edge = witness
        report.spanner_edges = h.m
        report.verified = RunReport.judge(max_stretch, report.declared_bound)
        print(report.to_json())
    else:
        print(json.dumps({"max_stretch": max_stretch, "witness_edge": witness, "spanner_edges": h.m}, sort_keys=True))
    return EXIT_OK


def _cmd_bench(args, cfg: RootConfig) -> int:
    families = [parse_family(spec) for spec in args.families.split(";") if spec.strip()]
    grid = {
        name: values
        for name, values in (("k", args.k), ("g", args.g), ("alpha", args.alpha), ("rounds", args.rounds), ("s", args.s))
        if values
    }
    cells = bench_matrix(args.algos, families, args.seeds, grid, args.deletion_ratio)
    store = RegressionStore.load(cfg.regression.path)
    rows = bench(cells, cfg, store, args.out, args.workers)
    print(f"{len(rows)} rows written to {args.out}")
    return EXIT_OK


# ── Doctor ───────────────────────────────────────────────────────────────────

def _doctor(cfg_path: Optional[str]) -> int:
    """Validate config, regression store and numeric stack."""
    print(f"Doctor mode: checking {cfg_path or '(defaults)'}")
    ok = True
    try:
        cfg = load_config(cfg_path)
        print("[ok] config loaded")
    except Exception as exc:
        print(f"[fail] config error: {exc}")
        return 1

    print(f"     seed={cfg.run.seed} workers={cfg.run.workers} regime={cfg.filtering.regime}")
    try:
        store = RegressionStore.load(cfg.regression.path)
        print(f"[ok] regression store: {len(store.bounds)} bound(s) from {cfg.regression.path}")
    except Exception as exc:
        ok = False
        print(f"[fail] regression store: {exc}")

    try:
        import numpy
        import scipy
        print(f"[ok] numpy {numpy.__version__}, scipy {scipy.__version__}")
    except Exception as exc:
        ok = False
        print(f"[fail] numeric stack: {exc}")

    if ok:
        print("All checks passed.")
    return EXIT_OK if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
