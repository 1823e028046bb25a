"""
streamspan.config
~~~~~~~~~~~~~~~~~
Config loader.

  - Every section is optional; a missing file path means all defaults
  - Values written as ``env:NAME`` resolve from the environment
  - STREAMSPAN_SEED overrides run.seed
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import yaml

SEED_ENV = "STREAMSPAN_SEED"
REGIMES = ("resistance", "ldd")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


# ──────────────────────────────────────────────────────────────────────────────
# ENV resolution
# ──────────────────────────────────────────────────────────────────────────────

def _env_resolve(val: Any) -> Any:
    if isinstance(val, str) and val.strip().lower().startswith("env:"):
        key = val.split(":", 1)[1].strip()
        return os.getenv(key, "")
    return val


def _deep_resolve(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _deep_resolve(_env_resolve(v)) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_deep_resolve(_env_resolve(v)) for v in obj]
    return _env_resolve(obj)


# ──────────────────────────────────────────────────────────────────────────────
# Config models
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    log_level: str = "INFO"
    workers: int = 4


@dataclass(frozen=True)
class SparsifyConfig:
    eps: float = 1.0 / 18.0
    oversample: float = 4.0


@dataclass(frozen=True)
class SketchConfig:
    l0_reps: int = 12
    sr_rows: int = 5
    max_retries: int = 3


@dataclass(frozen=True)
class FilteringConfig:
    regime: str = "resistance"
    resistance_c1: float = 4.0


@dataclass(frozen=True)
class RegressionConfig:
    path: str = "regression_bounds.yaml"


@dataclass(frozen=True)
class OutputConfig:
    run_log: Optional[str] = None
    transcript_dir: Optional[str] = None


@dataclass(frozen=True)
class RootConfig:
    run: RunConfig = RunConfig()
    sparsify: SparsifyConfig = SparsifyConfig()
    sketch: SketchConfig = SketchConfig()
    filtering: FilteringConfig = FilteringConfig()
    regression: RegressionConfig = RegressionConfig()
    output: OutputConfig = OutputConfig()


# ──────────────────────────────────────────────────────────────────────────────
# Loader
# ──────────────────────────────────────────────────────────────────────────────

def _opt_str(val: Any) -> Optional[str]:
    return str(val) if val not in (None, "") else None


def load_config(path: Optional[str | Path] = None) -> RootConfig:
    raw: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise FileNotFoundError(f"Config not found: {p}")
        raw = yaml.safe_load(p.read_text()) or {}
    raw = _deep_resolve(raw)

    # ── RUN ──────────────────────────────────────────────────────────────────
    run_raw = raw.get("run", {}) or {}
    seed_raw = os.getenv(SEED_ENV) or run_raw.get("seed", 0)
    try:
        seed = int(seed_raw or 0)
    except (TypeError, ValueError):
        raise ValueError(f"run.seed must be an integer, got {seed_raw!r}") from None
    run_cfg = RunConfig(
        seed=seed,
        log_level=str(run_raw.get("log_level", "INFO")).upper(),
        workers=int(run_raw.get("workers", 4)),
    )

    # ── SPARSIFY ─────────────────────────────────────────────────────────────
    sp_raw = raw.get("sparsify", {}) or {}
    sparsify_cfg = SparsifyConfig(
        eps=float(sp_raw.get("eps", 1.0 / 18.0)),
        oversample=float(sp_raw.get("oversample", 4.0)),
    )

    # ── SKETCH ───────────────────────────────────────────────────────────────
    sk_raw = raw.get("sketch", {}) or {}
    sketch_cfg = SketchConfig(
        l0_reps=int(sk_raw.get("l0_reps", 12)),
        sr_rows=int(sk_raw.get("sr_rows", 5)),
        max_retries=int(sk_raw.get("max_retries", 3)),
    )

    # ── FILTERING ────────────────────────────────────────────────────────────
    f_raw = raw.get("filtering", {}) or {}
    filtering_cfg = FilteringConfig(
        regime=str(f_raw.get("regime", "resistance")).lower(),
        resistance_c1=float(f_raw.get("resistance_c1", 4.0)),
    )

    # ── REGRESSION / OUTPUT ──────────────────────────────────────────────────
    reg_raw = raw.get("regression", {}) or {}
    regression_cfg = RegressionConfig(path=str(reg_raw.get("path", "regression_bounds.yaml")))

    out_raw = raw.get("output", {}) or {}
    output_cfg = OutputConfig(
        run_log=_opt_str(out_raw.get("run_log")),
        transcript_dir=_opt_str(out_raw.get("transcript_dir")),
    )

    # ── SANITY CHECKS ────────────────────────────────────────────────────────
    if run_cfg.log_level not in LOG_LEVELS:
        raise ValueError(f"run.log_level must be one of {LOG_LEVELS}, got {run_cfg.log_level!r}")
    if run_cfg.workers < 1:
        raise ValueError("run.workers must be at least 1.")
    if not 0.0 < sparsify_cfg.eps <= 1.0 / 18.0 + 1e-15:
        raise ValueError(f"sparsify.eps must lie in (0, 1/18], got {sparsify_cfg.eps}")
    if sparsify_cfg.oversample <= 0:
        raise ValueError("sparsify.oversample must be positive.")
    if sketch_cfg.l0_reps < 1 or sketch_cfg.sr_rows < 1:
        raise ValueError("sketch.l0_reps and sketch.sr_rows must be at least 1.")
    if sketch_cfg.max_retries < 0:
        raise ValueError("sketch.max_retries cannot be negative.")
    if filtering_cfg.regime not in REGIMES:
        raise ValueError(f"filtering.regime must be one of {REGIMES}, got {filtering_cfg.regime!r}")

    return RootConfig(
        run=run_cfg,
        sparsify=sparsify_cfg,
        sketch=sketch_cfg,
        filtering=filtering_cfg,
        regression=regression_cfg,
        output=output_cfg,
    )
