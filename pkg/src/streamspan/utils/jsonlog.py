"""
streamspan.utils.jsonlog
~~~~~~~~~~~~~~~~~~~~~~~~
Locked JSON-lines files: the run log (one RunReport per line) and transcript
dumps (one line per round and player).
"""
from __future__ import annotations

import json
import time
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List

import portalocker


def now_iso() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def ensure_parent(path: str | Path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)


def _line(event: Dict[str, Any]) -> str:
    return json.dumps(event, ensure_ascii=False, sort_keys=True)


def append_jsonl(path: str | Path, event: Dict[str, Any]) -> None:
    ensure_parent(path)
    event = dict(event)
    event.setdefault("ts", now_iso())
    line = _line(event)
    with portalocker.Lock(str(path), "a", timeout=5) as f:
        f.write(line + "\n")


def write_jsonl(path: str | Path, events: Iterable[Dict[str, Any]]) -> int:
    """Replace `path` with `events`; returns the number of lines written."""
    ensure_parent(path)
    count = 0
    with portalocker.Lock(str(path), "w", timeout=5) as f:
        for event in events:
            f.write(_line(event) + "\n")
            count += 1
    return count


def read_jsonl(path: str | Path) -> List[Dict[str, Any]]:
    return list(iter_jsonl(path))


def iter_jsonl(path: str | Path) -> Iterator[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            raw = raw.strip()
            if raw:
                yield json.loads(raw)
