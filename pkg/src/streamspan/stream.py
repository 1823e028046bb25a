"""
streamspan.stream
~~~~~~~~~~~~~~~~~
Replayable dynamic edge streams and the pass scheduler that meters them.

A StreamSource is immutable once built and replays the same event order on
every pass. Algorithms never touch the events directly: they hand per-event
consumers to ``PassScheduler.run_pass``, which counts physical passes, and
report retained state at pass boundaries through ``checkpoint``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Callable, Iterable, Iterator, List, Optional, Tuple, TypeVar

from .errors import InputError, ParameterError, RandomnessExhausted, UsageError
from .graph import Edge, UnweightedGraph, content_lines, canonical_edge, parse_header

logger = logging.getLogger(__name__)

T = TypeVar("T")

DEFAULT_MAX_RETRIES = 3


class Op(str, Enum):
    INSERT = "+"
    DELETE = "-"


@dataclass(frozen=True)
class UpdateEvent:
    op: Op
    edge: Edge

    @classmethod
    def insert(cls, u: int, v: int) -> "UpdateEvent":
        return cls(Op.INSERT, canonical_edge(u, v))

    @classmethod
    def delete(cls, u: int, v: int) -> "UpdateEvent":
        return cls(Op.DELETE, canonical_edge(u, v))

    @property
    def delta(self) -> int:
        return 1 if self.op is Op.INSERT else -1


class StreamSource:
    """
    A fixed vertex count and an ordered event list.

    Construction replays the events against a shadow edge set and rejects a
    DELETE of an absent edge or a second INSERT of a live one.
    """

    def __init__(self, n: int, events: Iterable[UpdateEvent]):
        if n < 0:
            raise InputError(f"negative vertex count {n}")
        self.n = int(n)
        self._events: Tuple[UpdateEvent, ...] = tuple(events)
        self._final = self._replay_shadow()

    def _replay_shadow(self) -> frozenset:
        live = set()
        for pos, ev in enumerate(self._events):
            u, v = ev.edge
            if not 0 <= u < v < self.n:
                raise InputError(f"event {pos}: edge {ev.edge} invalid for n={self.n}")
            if ev.op is Op.INSERT:
                if ev.edge in live:
                    raise InputError(f"event {pos}: second insert of live edge {ev.edge}")
                live.add(ev.edge)
            else:
                if ev.edge not in live:
                    raise InputError(f"event {pos}: delete of absent edge {ev.edge}")
                live.discard(ev.edge)
        return frozenset(live)

    @classmethod
    def from_graph(cls, g: UnweightedGraph) -> "StreamSource":
        return cls(g.n, (UpdateEvent(Op.INSERT, e) for e in g.sorted_edges))

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[UpdateEvent]:
        return iter(self._events)

    @property
    def events(self) -> Tuple[UpdateEvent, ...]:
        return self._events

    @cached_property
    def deletions(self) -> int:
        return sum(1 for ev in self._events if ev.op is Op.DELETE)

    def materialize(self) -> UnweightedGraph:
        return UnweightedGraph(self.n, self._final)


# ──────────────────────────────────────────────────────────────────────────────
# Text format: "n <N>" header, "+ u v" / "- u v", '#' comments
# ──────────────────────────────────────────────────────────────────────────────

def parse_stream(text: str) -> StreamSource:
    n: Optional[int] = None
    events: List[UpdateEvent] = []
    for lineno, line in content_lines(text):
        if n is None:
            n = parse_header(lineno, line)
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("+", "-"):
            raise InputError(f"line {lineno}: expected '+ u v' or '- u v', got {line!r}")
        try:
            u, v = int(parts[1]), int(parts[2])
        except ValueError:
            raise InputError(f"line {lineno}: non-integer vertex in {line!r}") from None
        events.append(UpdateEvent(Op(parts[0]), canonical_edge(u, v)))
    if n is None:
        raise InputError("missing 'n <N>' header")
    return StreamSource(n, events)


def format_stream(src: StreamSource) -> str:
    lines = [f"n {src.n}"] + [f"{ev.op.value} {ev.edge[0]} {ev.edge[1]}" for ev in src]
    return "\n".join(lines) + "\n"


def read_stream(path: str | Path) -> StreamSource:
    return parse_stream(Path(path).read_text(encoding="utf-8"))


def write_stream(src: StreamSource, path: str | Path) -> None:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(format_stream(src), encoding="utf-8")


# ──────────────────────────────────────────────────────────────────────────────
# Meters
# ──────────────────────────────────────────────────────────────────────────────

SKETCH_SPACE_CONSTANT = 1024


def sketch_word_bound(dim: int, s: int = 1) -> float:
    """Word budget every sketch must fit in: C·s·log²(dim)."""
    return SKETCH_SPACE_CONSTANT * max(s, 1) * math.log2(max(dim, 4)) ** 2


@dataclass
class PassMeter:
    passes_opened: int = 0
    retries: int = 0


@dataclass
class SpaceMeter:
    peak_words: int = 0
    pass_words: List[int] = field(default_factory=list)
    charges: List[Tuple[str, int]] = field(default_factory=list)

    def record(self, words: int) -> None:
        if words < 0:
            raise ParameterError(f"negative word count {words}")
        self.pass_words.append(int(words))
        self.peak_words = max(self.peak_words, int(words))


# ──────────────────────────────────────────────────────────────────────────────
# Pass scheduler
# ──────────────────────────────────────────────────────────────────────────────

class PassScheduler:
    """
    Drives passes over one source. Several consumers may subscribe to the
    same pass; each event is handed to them in order before the next event
    is read, and the pass is counted once.
    """

    def __init__(self, source: StreamSource, max_retries: int = DEFAULT_MAX_RETRIES):
        self.source = source
        self.max_retries = max_retries
        self.passes = PassMeter()
        self.space = SpaceMeter()
        self._open = False

    @property
    def passes_opened(self) -> int:
        return self.passes.passes_opened

    @property
    def retries(self) -> int:
        return self.passes.retries

    @property
    def peak_words(self) -> int:
        return self.space.peak_words

    def run_pass(self, *consumers: Callable[[UpdateEvent], None], label: str = "") -> int:
        if self._open:
            raise UsageError("a pass is already open; passes cannot nest")
        self._open = True
        self.passes.passes_opened += 1
        number = self.passes.passes_opened
        logger.debug("pass %d open (%s), %d consumer(s)", number, label or "-", len(consumers))
        try:
            for ev in self.source:
                for consume in consumers:
                    consume(ev)
        finally:
            self._open = False
        return number

    def checkpoint(self, words: int) -> None:
        """Record the words an algorithm retains across the current pass boundary."""
        self.space.record(words)

    def charge(self, words: int, label: str) -> None:
        """Charge a black-box budget that is not materialized as sketches."""
        self.space.charges.append((label, int(words)))
        self.space.record(words)

    def with_retries(self, label: str, attempt: Callable[[int], Optional[T]]) -> T:
        """
        Call ``attempt(0)``, ``attempt(1)``, ... until it returns a result.

        ``None`` means the attempt's sketches failed to decode; every attempt
        after the first is a replay with fresh randomness and is counted in
        the retry meter.
        """
        for number in range(self.max_retries + 1):
            if number:
                self.passes.retries += 1
                logger.warning("%s: sketch decode failed, retry %d/%d", label, number, self.max_retries)
            result = attempt(number)
            if result is not None:
                return result
        raise RandomnessExhausted(f"{label}: sketch decoding failed after {self.max_retries} retries")


def open_pass(scheduler: PassScheduler, *consumers: Callable[[UpdateEvent], None]) -> int:
    return scheduler.run_pass(*consumers)


def checkpoint(scheduler: PassScheduler, words: int) -> None:
    scheduler.checkpoint(words)


class EdgeCollector:
    """
    Materializes the live edge set restricted to ``vertices`` during a pass.

    Stands in for a streaming sparsifier sketch; callers charge that
    sketch's budget separately.
    """

    def __init__(self, n: int, vertices: Optional[Iterable[int]] = None):
        self.n = n
        self.vertices = None if vertices is None else frozenset(vertices)
        self.edges: set = set()

    def accepts(self, edge: Edge) -> bool:
        return self.vertices is None or (edge[0] in self.vertices and edge[1] in self.vertices)

    def __call__(self, ev: UpdateEvent) -> None:
        if not self.accepts(ev.edge):
            return
        if ev.op is Op.INSERT:
            self.edges.add(ev.edge)
        else:
            self.edges.discard(ev.edge)

    def graph(self) -> UnweightedGraph:
        return UnweightedGraph(self.n, frozenset(self.edges))
