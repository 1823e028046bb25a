from __future__ import annotations

import json

import pytest

from streamspan.config import SEED_ENV
from streamspan.graph import UnweightedGraph, write_graph
from streamspan.instances import cycle_graph
from streamspan.main import EXIT_INPUT, EXIT_OK, main
from streamspan.stream import read_stream


@pytest.fixture(autouse=True)
def _isolated(monkeypatch, tmp_path):
    monkeypatch.delenv(SEED_ENV, raising=False)
    monkeypatch.chdir(tmp_path)


def _last_json(capsys) -> dict:
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


def test_gen_writes_stream(tmp_path):
    out = tmp_path / "s.txt"
    assert main(["gen", "--family", "cycle:n=10", "--deletion-ratio", "0.2", "--out", str(out)]) == EXIT_OK
    src = read_stream(out)
    assert src.materialize() == cycle_graph(10)
    assert src.deletions == 2


def test_run_bs_on_cycle(capsys):
    assert main(["run", "--algo", "bs", "--k", "2", "--family", "cycle:n=50"]) == EXIT_OK
    report = _last_json(capsys)
    assert report["passes"] == 2 + report["retries"]
    assert report["max_stretch"] == 1.0
    assert report["verified"] is True


def test_run_recursive_declares_bound(capsys):
    assert main(["run", "--algo", "recursive-kw", "--k", "7", "--g", "1", "--family", "gnp:n=128,p=0.05"]) == EXIT_OK
    assert _last_json(capsys)["declared_bound"] == 29


def test_run_then_verify_round_trip(tmp_path, capsys):
    stream = tmp_path / "s.txt"
    spanner = tmp_path / "h.txt"
    report_path = tmp_path / "r.json"
    main(["gen", "--family", "gnp:n=30,p=0.2", "--seed", "1", "--out", str(stream)])
    assert main([
        "run", "--algo", "kw", "--k", "2", "--stream", str(stream),
        "--spanner-out", str(spanner), "--report-out", str(report_path),
    ]) == EXIT_OK
    first = _last_json(capsys)
    assert main(["verify", "--stream", str(stream), "--spanner", str(spanner), "--report", str(report_path)]) == EXIT_OK
    again = _last_json(capsys)
    assert again["max_stretch"] == first["max_stretch"]
    assert again["verified"] == first["verified"]


def test_verify_rejects_non_subgraph(tmp_path, capsys):
    graph = tmp_path / "g.txt"
    spanner = tmp_path / "h.txt"
    write_graph(cycle_graph(6), graph)
    write_graph(UnweightedGraph(6, frozenset({(0, 3)})), spanner)
    assert main(["verify", "--graph", str(graph), "--spanner", str(spanner)]) == EXIT_INPUT
    assert "not present" in capsys.readouterr().err


def test_missing_parameter_exits_2(capsys):
    assert main(["run", "--algo", "bs", "--family", "cycle:n=5"]) == EXIT_INPUT
    assert "--k" in capsys.readouterr().err


def test_bad_family_exits_2():
    assert main(["gen", "--family", "torus:n=4"]) == EXIT_INPUT


def test_no_command_prints_help(capsys):
    assert main([]) == EXIT_INPUT
    assert "usage" in capsys.readouterr().out


def test_bench_command(tmp_path, capsys):
    out = tmp_path / "b.csv"
    code = main([
        "bench", "--algos", "bs,kw", "--families", "cycle:n=12;path:n=10",
        "--seeds", "0,1", "--k", "2", "--workers", "2", "--out", str(out),
    ])
    assert code == EXIT_OK
    assert len(out.read_text().strip().splitlines()) == 1 + 2 * 2 * 2


def test_doctor_with_defaults(capsys):
    assert main(["--doctor"]) == EXIT_OK
    assert "All checks passed." in capsys.readouterr().out
