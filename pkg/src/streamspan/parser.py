"""
streamspan.parser
~~~~~~~~~~~~~~~~~
Parse generator specs such as ``gnp:n=200,p=0.1`` into typed Family objects.

  - The name before ``:`` picks the family; aliases are case-insensitive
  - Parameters are ``key=value`` pairs separated by commas or whitespace
  - Unknown families, unknown keys and missing keys raise ParameterError
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from typing import Dict

from .errors import ParameterError
from .graph import UnweightedGraph
from .instances import (
    complete_graph,
    conjectured_hard,
    cut_bad_instance,
    cycle_graph,
    gnp,
    layered_custom,
    layered_instance,
    path_graph,
    star_graph,
)


# ── Family types ──────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Family:
    @property
    def name(self) -> str:
        return _NAMES[type(self)]

    def spec(self) -> str:
        """Canonical spec string; parses back to an equal Family."""
        params = ",".join(f"{f.name}={getattr(self, f.name)}" for f in fields(self))
        return f"{self.name}:{params}" if params else self.name

    def build(self, seed: int) -> UnweightedGraph:
        raise NotImplementedError


@dataclass(frozen=True)
class Gnp(Family):
    n: int
    p: float

    def build(self, seed: int) -> UnweightedGraph:
        return gnp(self.n, self.p, seed)


@dataclass(frozen=True)
class Layered(Family):
    a: int
    N: int

    def build(self, seed: int) -> UnweightedGraph:
        return layered_custom(self.a, self.N).graph


@dataclass(frozen=True)
class LayeredBySize(Family):
    n: int

    def build(self, seed: int) -> UnweightedGraph:
        return layered_instance(self.n).graph


@dataclass(frozen=True)
class CutBad(Family):
    n: int

    def build(self, seed: int) -> UnweightedGraph:
        return cut_bad_instance(self.n).graph


@dataclass(frozen=True)
class Hard(Family):
    n: int
    d: int

    def build(self, seed: int) -> UnweightedGraph:
        return conjectured_hard(self.n, self.d, seed).graph


@dataclass(frozen=True)
class Cycle(Family):
    n: int

    def build(self, seed: int) -> UnweightedGraph:
        return cycle_graph(self.n)


@dataclass(frozen=True)
class Path(Family):
    n: int

    def build(self, seed: int) -> UnweightedGraph:
        return path_graph(self.n)


@dataclass(frozen=True)
class Complete(Family):
    n: int

    def build(self, seed: int) -> UnweightedGraph:
        return complete_graph(self.n)


@dataclass(frozen=True)
class Star(Family):
    leaves: int

    def build(self, seed: int) -> UnweightedGraph:
        return star_graph(self.leaves)


_NAMES = {
    Gnp: "gnp",
    Layered: "layered",
    LayeredBySize: "layered-n",
    CutBad: "cut-bad",
    Hard: "hard",
    Cycle: "cycle",
    Path: "path",
    Complete: "complete",
    Star: "star",
}

_ALIASES: Dict[str, type] = {
    "gnp": Gnp, "er": Gnp, "g(n,p)": Gnp,
    "layered": Layered,
    "layered-n": LayeredBySize, "tight": LayeredBySize,
    "cut-bad": CutBad, "cutbad": CutBad,
    "hard": Hard, "band": Hard,
    "cycle": Cycle, "c": Cycle,
    "path": Path, "p": Path,
    "complete": Complete, "k": Complete,
    "star": Star,
}


# ── Tokenizer ─────────────────────────────────────────────────────────────────

_PAIR_RE = re.compile(r"^([A-Za-z_]\w*)=(.+)$")
_INT_RE = re.compile(r"^[+-]?\d+$")
_FLOAT_RE = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")


def _tokenize(text: str) -> list[str]:
    body = (text or "").strip()
    return [tok for tok in re.split(r"[,\s]+", body) if tok] if body else []


def _number(key: str, raw: str, kind: type):
    if kind is int and _INT_RE.match(raw):
        return int(raw)
    if kind is float and _FLOAT_RE.match(raw):
        return float(raw)
    raise ParameterError(f"{key}={raw!r} is not a valid {kind.__name__}")


# ── Public entry point ────────────────────────────────────────────────────────

def parse_family(spec: str) -> Family:
    head, _, body = (spec or "").strip().partition(":")
    cls = _ALIASES.get(head.strip().lower())
    if cls is None:
        raise ParameterError(f"unknown graph family {head!r} (known: {sorted(set(_NAMES.values()))})")

    kinds = {f.name: f.type for f in fields(cls)}
    values: Dict[str, object] = {}
    for tok in _tokenize(body):
        m = _PAIR_RE.match(tok)
        if not m:
            raise ParameterError(f"expected key=value in {spec!r}, got {tok!r}")
        key, raw = m.group(1), m.group(2)
        if key not in kinds:
            raise ParameterError(f"{_NAMES[cls]} takes {sorted(kinds)}, got {key!r}")
        values[key] = _number(key, raw, float if kinds[key] in (float, "float") else int)

    missing = sorted(set(kinds) - set(values))
    if missing:
        raise ParameterError(f"{_NAMES[cls]} is missing {missing}")
    return cls(**values)
