"""
streamspan.sketches
~~~~~~~~~~~~~~~~~~~
Linear sketches of integer vectors: l0-sampling, s-sparse recovery, subset
sampling and edge recovery between two vertex sets.

All cell arithmetic is exact modulo the Mersenne prime 2^61 - 1, so a sketch
state is a fixed linear function of the vector given its seed, identical on
every platform. A cell holds ``(count, index_sum, fingerprint)``; a cell
whose vector restriction is 1-sparse decodes as
``index = index_sum / count`` and is accepted only when the polynomial
fingerprint ``count * z^index`` matches.

Cells are stored sparsely (zero cells are dropped) while ``words`` and
``to_words()`` report the dense footprint, which is what the space meter
charges.

Edge vectors use the pair encoding ``u*n + v`` on canonical pairs. Where
cluster merging must cancel internal edges, per-vertex sketches use the
signed incidence convention of ``incidence_delta``.
"""
from __future__ import annotations

import copy
import logging
from collections.abc import Set as AbstractSet
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from functools import lru_cache
from typing import Callable, Container, Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from .errors import IncompatibleSketch, InputError, ParameterError
from .graph import Edge, canonical_edge, pair_from_index, pair_index
from .utils.seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)

PRIME = (1 << 61) - 1
HEADER_WORDS = 4
DEFAULT_L0_REPS = 12
DEFAULT_SR_ROWS = 5


@lru_cache(maxsize=1 << 18)
def _zpow(z: int, exp: int) -> int:
    return pow(z, exp, PRIME)


class Outcome(str, Enum):
    OK = "ok"
    EMPTY = "empty"
    NONE = "none"
    FAIL = "fail"
    OVERFLOW = "overflow"


class SketchKind(IntEnum):
    L0 = 1
    SPARSE_RECOVERY = 2
    SUBSET = 3


def _signed(x: int) -> int:
    return x if x <= PRIME // 2 else x - PRIME


@dataclass(frozen=True)
class SketchOptions:
    l0_reps: int = DEFAULT_L0_REPS
    sr_rows: int = DEFAULT_SR_ROWS


def levels_for(dim: int) -> int:
    """⌈log2 dim⌉ + 1."""
    return max(0, dim - 1).bit_length() + 1


def incidence_delta(v: int, edge: Edge, delta: int) -> int:
    """Signed incidence: +delta at the smaller endpoint's row, -delta at the larger."""
    u, w = edge
    if v == u:
        return delta
    if v == w:
        return -delta
    raise InputError(f"vertex {v} is not an endpoint of {edge}")


# ──────────────────────────────────────────────────────────────────────────────
# Shared randomness
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SketchSeed:
    """
    A hash-family draw. Sketches built from the same SketchSeed with the same
    kind and shape share hash functions and may be merged.
    """
    seed: int
    lineage: int

    @classmethod
    def derive(cls, seed: int, *labels) -> "SketchSeed":
        return cls(seed=int(seed), lineage=derive_seed(seed, "lineage", *labels))

    def fresh(self, attempt: int) -> "SketchSeed":
        return SketchSeed(seed=self.seed, lineage=derive_seed(self.lineage, "retry", attempt))

    def rng(self, *labels) -> np.random.Generator:
        return rng_for(self.lineage, *labels)


# ──────────────────────────────────────────────────────────────────────────────
# Cell storage
# ──────────────────────────────────────────────────────────────────────────────

class _CellTable:
    __slots__ = ("cells",)

    def __init__(self, cells: Optional[Dict[int, List[int]]] = None):
        self.cells: Dict[int, List[int]] = cells if cells is not None else {}

    def add(self, key: int, count: int, index_sum: int, fingerprint: int) -> None:
        cell = self.cells.get(key)
        if cell is None:
            cell = [count % PRIME, index_sum % PRIME, fingerprint % PRIME]
            if cell[0] or cell[1] or cell[2]:
                self.cells[key] = cell
            return
        cell[0] = (cell[0] + count) % PRIME
        cell[1] = (cell[1] + index_sum) % PRIME
        cell[2] = (cell[2] + fingerprint) % PRIME
        if not (cell[0] or cell[1] or cell[2]):
            del self.cells[key]

    def copy(self) -> "_CellTable":
        return _CellTable({k: list(v) for k, v in self.cells.items()})

    def combined(self, other: "_CellTable", sign: int) -> "_CellTable":
        out = self.copy()
        for key, (c, i, f) in other.cells.items():
            out.add(key, sign * c, sign * i, sign * f)
        return out

    def dense(self, size: int) -> np.ndarray:
        arr = np.zeros((size, 3), dtype="<i8")
        for key, cell in self.cells.items():
            arr[key] = cell
        return arr

    def __eq__(self, other: object) -> bool:
        return isinstance(other, _CellTable) and self.cells == other.cells

    def __len__(self) -> int:
        return len(self.cells)


def _one_sparse(cell: List[int], z: int, dim: int) -> Optional[Tuple[int, int]]:
    count, index_sum, fingerprint = cell
    if count == 0:
        return None
    index = index_sum * pow(count, -1, PRIME) % PRIME
    if index >= dim:
        return None
    if fingerprint != count * _zpow(z, index) % PRIME:
        return None
    return index, count


# ──────────────────────────────────────────────────────────────────────────────
# Base
# ──────────────────────────────────────────────────────────────────────────────

class LinearSketch:
    kind: SketchKind

    def __init__(self, dim: int, seed: SketchSeed):
        if dim < 1:
            raise ParameterError(f"sketch dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.seed = seed
        self._cells = _CellTable()

    # ── Shape ────────────────────────────────────────────────────────────────

    @property
    def s(self) -> int:
        return 0

    @property
    def n_cells(self) -> int:
        raise NotImplementedError

    def _shape(self) -> tuple:
        raise NotImplementedError

    @property
    def words(self) -> int:
        return HEADER_WORDS + 3 * self.n_cells

    # ── Linear algebra ───────────────────────────────────────────────────────

    def update(self, coord: int, delta: int) -> "LinearSketch":
        """Add ``delta`` at ``coord`` in place; returns the sketch."""
        if not 0 <= coord < self.dim:
            raise InputError(f"coordinate {coord} out of range for dim={self.dim}")
        if delta:
            self._apply(int(coord), int(delta))
        return self

    def _apply(self, coord: int, delta: int) -> None:
        raise NotImplementedError

    def _check_compatible(self, other: "LinearSketch") -> None:
        if type(self) is not type(other):
            raise IncompatibleSketch(f"cannot combine {type(self).__name__} with {type(other).__name__}")
        if self.seed.lineage != other.seed.lineage:
            raise IncompatibleSketch("sketch lineages differ")
        if self.dim != other.dim or self._shape() != other._shape():
            raise IncompatibleSketch("sketch dimensions or shapes differ")

    def _with_cells(self, cells: _CellTable) -> "LinearSketch":
        out = copy.copy(self)
        out._cells = cells
        return out

    def copy(self) -> "LinearSketch":
        return self._with_cells(self._cells.copy())

    def merge(self, other: "LinearSketch") -> "LinearSketch":
        self._check_compatible(other)
        return self._with_cells(self._cells.combined(other._cells, 1))

    def subtract(self, other: "LinearSketch") -> "LinearSketch":
        self._check_compatible(other)
        return self._with_cells(self._cells.combined(other._cells, -1))

    def is_zero(self) -> bool:
        return len(self._cells) == 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinearSketch) or type(self) is not type(other):
            return NotImplemented
        return (
            self.seed.lineage == other.seed.lineage
            and self.dim == other.dim
            and self._shape() == other._shape()
            and self._cells == other._cells
        )

    __hash__ = None  # type: ignore[assignment]

    # ── Serialization ────────────────────────────────────────────────────────

    def to_words(self) -> np.ndarray:
        header = np.array([int(self.kind), self.dim, self.s, self.seed.lineage], dtype="<i8")
        return np.concatenate([header, self._cells.dense(self.n_cells).ravel()])

    def to_bytes(self) -> bytes:
        return self.to_words().tobytes()

    def _load(self, data: bytes) -> None:
        words = np.frombuffer(data, dtype="<i8")
        if len(words) != self.words:
            raise IncompatibleSketch(f"expected {self.words} words, got {len(words)}")
        kind, dim, s, lineage = (int(x) for x in words[:HEADER_WORDS])
        if (kind, dim, s, lineage) != (int(self.kind), self.dim, self.s, self.seed.lineage):
            raise IncompatibleSketch("serialized header does not match the expected sketch")
        body = words[HEADER_WORDS:].reshape(-1, 3)
        for key in np.flatnonzero(body.any(axis=1)):
            self._cells.cells[int(key)] = [int(x) for x in body[key]]


def _parse_header(data: bytes) -> Tuple[int, int, int, int]:
    if len(data) < 8 * HEADER_WORDS:
        raise IncompatibleSketch("truncated sketch header")
    words = np.frombuffer(data[: 8 * HEADER_WORDS], dtype="<i8")
    return tuple(int(x) for x in words)  # type: ignore[return-value]


# ──────────────────────────────────────────────────────────────────────────────
# l0-sampler
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class L0Result:
    outcome: Outcome
    index: Optional[int] = None
    value: Optional[int] = None


class L0Sketch(LinearSketch):
    """
    ``reps`` independent chains of ``⌈log2 dim⌉+1`` nested subsampling levels.
    Coordinate i reaches level j of chain r when the trailing-zero count of
    the pairwise-independent hash h_r(i) is at least j.
    """
    kind = SketchKind.L0

    def __init__(self, dim: int, seed: SketchSeed, reps: int = DEFAULT_L0_REPS):
        super().__init__(dim, seed)
        if reps < 1:
            raise ParameterError("l0 sketch needs at least one repetition")
        self.reps = reps
        self.levels = levels_for(self.dim)
        rng = seed.rng("l0", self.dim, reps)
        self._a = [int(x) for x in rng.integers(1, PRIME, size=reps)]
        self._b = [int(x) for x in rng.integers(0, PRIME, size=reps)]
        self._z = [int(x) for x in rng.integers(2, PRIME, size=reps)]

    @property
    def n_cells(self) -> int:
        return self.reps * self.levels

    def _shape(self) -> tuple:
        return (self.reps, self.levels)

    def _depth(self, rep: int, coord: int) -> int:
        h = (self._a[rep] * coord + self._b[rep]) % PRIME
        if h == 0:
            return self.levels - 1
        return min((h & -h).bit_length() - 1, self.levels - 1)

    def _apply(self, coord: int, delta: int) -> None:
        for r in range(self.reps):
            depth = self._depth(r, coord)
            fp = delta * _zpow(self._z[r], coord)
            base = r * self.levels
            for j in range(depth + 1):
                self._cells.add(base + j, delta, delta * coord, fp)

    def _decode_cells(self, cells: Dict[Tuple[int, int], List[int]]) -> Optional[Tuple[int, int]]:
        best: Optional[Tuple[int, int]] = None
        for (r, j), cell in cells.items():
            hit = _one_sparse(cell, self._z[r], self.dim)
            if hit is None or self._depth(r, hit[0]) < j:
                continue
            if best is None or hit[0] < best[0]:
                best = hit
        return best

    def sample(self) -> L0Result:
        if self.is_zero():
            return L0Result(Outcome.EMPTY)
        cells = {divmod(key, self.levels): cell for key, cell in self._cells.cells.items()}
        best = self._decode_cells(cells)
        if best is None:
            return L0Result(Outcome.FAIL)
        return L0Result(Outcome.OK, best[0], _signed(best[1]))

    @classmethod
    def from_bytes(cls, data: bytes, seed: SketchSeed, reps: int = DEFAULT_L0_REPS) -> "L0Sketch":
        _, dim, _, _ = _parse_header(data)
        sk = cls(dim, seed, reps)
        sk._load(data)
        return sk


# ──────────────────────────────────────────────────────────────────────────────
# s-sparse recovery
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SRResult:
    outcome: Outcome
    entries: Dict[int, int] = field(default_factory=dict)


class SparseRecoverySketch(LinearSketch):
    """
    ``rows`` hash rows of ``2s + 8`` buckets each. Decoding peels pure
    buckets and subtracts them everywhere; anything left over, or more than
    ``s`` recovered entries, is reported as OVERFLOW.
    """
    kind = SketchKind.SPARSE_RECOVERY

    def __init__(self, dim: int, s: int, seed: SketchSeed, rows: int = DEFAULT_SR_ROWS):
        super().__init__(dim, seed)
        if s < 1:
            raise ParameterError(f"sparsity budget must be positive, got {s}")
        if rows < 1:
            raise ParameterError("sparse recovery needs at least one row")
        self._s = int(s)
        self.rows = rows
        self.width = 2 * self._s + 8
        rng = seed.rng("sr", self.dim, self._s, rows)
        self._a = [int(x) for x in rng.integers(1, PRIME, size=rows)]
        self._b = [int(x) for x in rng.integers(0, PRIME, size=rows)]
        self._z = [int(x) for x in rng.integers(2, PRIME, size=rows)]

    @property
    def s(self) -> int:
        return self._s

    @property
    def n_cells(self) -> int:
        return self.rows * self.width

    def _shape(self) -> tuple:
        return (self._s, self.rows, self.width)

    def _bucket(self, row: int, coord: int) -> int:
        return ((self._a[row] * coord + self._b[row]) % PRIME) % self.width

    def _apply(self, coord: int, delta: int) -> None:
        for r in range(self.rows):
            fp = delta * _zpow(self._z[r], coord)
            self._cells.add(r * self.width + self._bucket(r, coord), delta, delta * coord, fp)

    def decode(self) -> SRResult:
        work = {k: list(v) for k, v in self._cells.cells.items()}
        found: Dict[int, int] = {}
        stack = sorted(work, reverse=True)
        while stack:
            key = stack.pop()
            cell = work.get(key)
            if cell is None:
                continue
            row, bucket = divmod(key, self.width)
            hit = _one_sparse(cell, self._z[row], self.dim)
            if hit is None or self._bucket(row, hit[0]) != bucket:
                continue
            index, value = hit
            if index in found:
                return SRResult(Outcome.OVERFLOW)
            found[index] = value
            if len(found) > self._s:
                return SRResult(Outcome.OVERFLOW)
            for r in range(self.rows):
                k2 = r * self.width + self._bucket(r, index)
                other = work.get(k2)
                if other is None:
                    return SRResult(Outcome.OVERFLOW)
                other[0] = (other[0] - value) % PRIME
                other[1] = (other[1] - value * index) % PRIME
                other[2] = (other[2] - value * _zpow(self._z[r], index)) % PRIME
                if not (other[0] or other[1] or other[2]):
                    del work[k2]
                else:
                    stack.append(k2)
        if work:
            return SRResult(Outcome.OVERFLOW)
        return SRResult(Outcome.OK, {i: _signed(v) for i, v in sorted(found.items())})

    def decode_residues(self) -> SRResult:
        """Like ``decode`` but values stay as residues mod the prime."""
        res = self.decode()
        if res.outcome is not Outcome.OK:
            return res
        return SRResult(Outcome.OK, {i: v % PRIME for i, v in res.entries.items()})

    @classmethod
    def from_bytes(cls, data: bytes, seed: SketchSeed, rows: int = DEFAULT_SR_ROWS) -> "SparseRecoverySketch":
        _, dim, s, _ = _parse_header(data)
        sk = cls(dim, s, seed, rows)
        sk._load(data)
        return sk


# ──────────────────────────────────────────────────────────────────────────────
# Subset sampling
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SubsetResult:
    outcome: Outcome
    indices: Tuple[int, ...] = ()
    per_part: Dict[int, int] = field(default_factory=dict)


class SubsetSketch(LinearSketch):
    """
    One nonzero coordinate from every nonempty part of a partition.

    Each part carries an l0-sampler (all parts share one hash family); the
    concatenated sampler states form a vector that is itself sketched by a
    SparseRecoverySketch with budget ``s`` times the cells of one sampler.
    Decoding recovers every nonempty sampler and samples it.
    """
    kind = SketchKind.SUBSET

    def __init__(
        self,
        dim: int,
        parts: int,
        part_of: Callable[[int], int],
        s: int,
        seed: SketchSeed,
        reps: int = DEFAULT_L0_REPS,
        rows: int = DEFAULT_SR_ROWS,
    ):
        super().__init__(dim, seed)
        if parts < 1:
            raise ParameterError("subset sketch needs at least one part")
        self.parts = int(parts)
        self.part_of = part_of
        self._s = int(s)
        self._sampler = L0Sketch(dim, seed, reps)
        self.reps = reps
        self.levels = self._sampler.levels
        self._span = reps * self.levels * 3
        self._outer = SparseRecoverySketch(self.parts * self._span, self._s * self._span, seed, rows)
        self._cells = self._outer._cells

    @property
    def s(self) -> int:
        return self._s

    @property
    def n_cells(self) -> int:
        return self._outer.n_cells

    def _shape(self) -> tuple:
        return (self.parts, self._s, self.reps, self.levels, self._outer.rows)

    def _with_cells(self, cells: _CellTable) -> "SubsetSketch":
        out = copy.copy(self)
        out._outer = copy.copy(self._outer)
        out._outer._cells = cells
        out._cells = cells
        return out

    def _apply(self, coord: int, delta: int) -> None:
        part = self.part_of(coord)
        if not 0 <= part < self.parts:
            raise InputError(f"coordinate {coord} maps to part {part} outside [0, {self.parts})")
        sampler = self._sampler
        for r in range(self.reps):
            depth = sampler._depth(r, coord)
            fp = delta * _zpow(sampler._z[r], coord) % PRIME
            for j in range(depth + 1):
                base = ((part * self.reps + r) * self.levels + j) * 3
                self._outer._apply(base, delta)
                self._outer._apply(base + 1, delta * coord)
                self._outer._apply(base + 2, fp)

    def recover(self) -> SubsetResult:
        res = self._outer.decode_residues()
        if res.outcome is not Outcome.OK:
            return SubsetResult(Outcome.OVERFLOW)
        grouped: Dict[int, Dict[Tuple[int, int], List[int]]] = {}
        for coord, value in res.entries.items():
            cell_id, comp = divmod(coord, 3)
            part, rest = divmod(cell_id, self.reps * self.levels)
            key = divmod(rest, self.levels)
            grouped.setdefault(part, {}).setdefault(key, [0, 0, 0])[comp] = value

        per_part: Dict[int, int] = {}
        for part in sorted(grouped):
            best = self._sampler._decode_cells(grouped[part])
            if best is None or self.part_of(best[0]) != part:
                return SubsetResult(Outcome.FAIL)
            per_part[part] = best[0]
        return SubsetResult(Outcome.OK, tuple(sorted(per_part.values())), per_part)


# ──────────────────────────────────────────────────────────────────────────────
# Edge recovery between vertex sets
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class EdgeResult:
    outcome: Outcome
    edge: Optional[Edge] = None


@dataclass(frozen=True)
class EdgeSetResult:
    outcome: Outcome
    edges: FrozenSet[Edge] = frozenset()


class EdgeProbeSketch:
    """
    Sketch of the indicator vector of E ∩ (A × B) over the pair space
    ``[n*n)``. With ``budget=None`` it holds an l0-sampler (one edge), else
    a SparseRecoverySketch able to return every crossing edge.
    """

    def __init__(
        self,
        n: int,
        a: Container[int],
        b: Container[int],
        seed: SketchSeed,
        budget: Optional[int] = None,
        reps: int = DEFAULT_L0_REPS,
        rows: int = DEFAULT_SR_ROWS,
    ):
        if isinstance(a, AbstractSet) and isinstance(b, AbstractSet) and not a.isdisjoint(b):
            raise ParameterError("edge probe vertex sets must be disjoint")
        self.n = n
        self.a = a
        self.b = b
        dim = max(1, n * n)
        if budget is None:
            self.sketch: LinearSketch = L0Sketch(dim, seed, reps)
        else:
            self.sketch = SparseRecoverySketch(dim, budget, seed, rows)

    @property
    def words(self) -> int:
        return self.sketch.words

    def crosses(self, u: int, v: int) -> bool:
        return (u in self.a and v in self.b) or (u in self.b and v in self.a)

    def observe(self, edge: Edge, delta: int) -> bool:
        u, v = canonical_edge(*edge)
        if not self.crosses(u, v):
            return False
        self.sketch.update(pair_index((u, v), self.n), delta)
        return True

    def edge_between(self) -> EdgeResult:
        if not isinstance(self.sketch, L0Sketch):
            res = self.edges_between()
            if res.outcome is not Outcome.OK:
                return EdgeResult(Outcome.FAIL)
            return EdgeResult(Outcome.OK, min(res.edges)) if res.edges else EdgeResult(Outcome.NONE)
        res = self.sketch.sample()
        if res.outcome is Outcome.EMPTY:
            return EdgeResult(Outcome.NONE)
        if res.outcome is Outcome.FAIL:
            return EdgeResult(Outcome.FAIL)
        return EdgeResult(Outcome.OK, pair_from_index(res.index, self.n))

    def edges_between(self) -> EdgeSetResult:
        if not isinstance(self.sketch, SparseRecoverySketch):
            raise ParameterError("edges_between needs a probe built with a budget")
        res = self.sketch.decode()
        if res.outcome is not Outcome.OK:
            return EdgeSetResult(Outcome.OVERFLOW)
        return EdgeSetResult(Outcome.OK, frozenset(pair_from_index(i, self.n) for i in res.entries))


# ──────────────────────────────────────────────────────────────────────────────
# Functional surface
# ──────────────────────────────────────────────────────────────────────────────

def sk_update(sk: LinearSketch, coord: int, delta: int) -> LinearSketch:
    return sk.update(coord, delta)


def sk_merge(a: LinearSketch, b: LinearSketch) -> LinearSketch:
    return a.merge(b)


def sk_subtract(a: LinearSketch, b: LinearSketch) -> LinearSketch:
    return a.subtract(b)


def l0_sample(sk: L0Sketch) -> L0Result:
    return sk.sample()


def sr_decode(sk: SparseRecoverySketch) -> SRResult:
    return sk.decode()


def subset_recover(sk: SubsetSketch) -> SubsetResult:
    return sk.recover()


def edge_between(sk: EdgeProbeSketch) -> EdgeResult:
    return sk.edge_between()


def edges_between(sk: EdgeProbeSketch) -> EdgeSetResult:
    return sk.edges_between()
