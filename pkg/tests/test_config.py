from __future__ import annotations

from pathlib import Path

import pytest

from streamspan.config import SEED_ENV, RootConfig, load_config


@pytest.fixture(autouse=True)
def _no_seed_override(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


def _write(tmp_path, text: str):
    path = tmp_path / "config.yaml"
    path.write_text(text)
    return path


def test_defaults_without_file():
    assert load_config(None) == RootConfig()


def test_empty_file_gives_defaults(tmp_path):
    assert load_config(_write(tmp_path, "")) == RootConfig()


def test_missing_file_raises(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "nope.yaml")


def test_sections_are_read(tmp_path):
    cfg = load_config(_write(tmp_path, """
run:
  seed: 7
  log_level: debug
  workers: 2
sketch:
  l0_reps: 20
filtering:
  regime: LDD
output:
  run_log: runs/log.jsonl
  transcript_dir: ""
"""))
    assert cfg.run.seed == 7
    assert cfg.run.log_level == "DEBUG"
    assert cfg.run.workers == 2
    assert cfg.sketch.l0_reps == 20
    assert cfg.sketch.sr_rows == 5
    assert cfg.filtering.regime == "ldd"
    assert cfg.output.run_log == "runs/log.jsonl"
    assert cfg.output.transcript_dir is None


def test_env_values_resolve(tmp_path, monkeypatch):
    monkeypatch.setenv("SPAN_LOG", "/tmp/spans.jsonl")
    cfg = load_config(_write(tmp_path, "output:\n  run_log: env:SPAN_LOG\n"))
    assert cfg.output.run_log == "/tmp/spans.jsonl"


def test_seed_env_overrides_file(tmp_path, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "42")
    cfg = load_config(_write(tmp_path, "run:\n  seed: 3\n"))
    assert cfg.run.seed == 42


@pytest.mark.parametrize(
    "text",
    [
        "run:\n  seed: abc\n",
        "run:\n  log_level: LOUD\n",
        "run:\n  workers: 0\n",
        "sparsify:\n  eps: 0.1\n",
        "sparsify:\n  oversample: -1\n",
        "sketch:\n  sr_rows: 0\n",
        "sketch:\n  max_retries: -1\n",
        "filtering:\n  regime: magic\n",
    ],
)
def test_sanity_checks(tmp_path, text):
    with pytest.raises(ValueError):
        load_config(_write(tmp_path, text))


def test_example_config_loads():
    example = Path(__file__).resolve().parent.parent / "config.example.yaml"
    cfg = load_config(example)
    assert cfg.filtering.regime == "resistance"
    assert cfg.regression.path == "regression_bounds.yaml"
