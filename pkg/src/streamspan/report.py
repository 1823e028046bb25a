"""
streamspan.report
~~~~~~~~~~~~~~~~~
Run results and the regression-bound store.

``SpannerResult`` is what every algorithm returns; ``RunReport`` is the
stable JSON record the CLI prints and appends to the run log.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import yaml

from .errors import InputError
from .graph import Edge, UnweightedGraph

logger = logging.getLogger(__name__)

WILDCARD = "*"


@dataclass
class SpannerResult:
    spanner: UnweightedGraph
    passes: int = 0
    retries: int = 0
    rounds: int = 0
    peak_words: int = 0
    max_bits_per_player_per_round: int = 0
    charging: Tuple[str, ...] = ()
    details: Dict[str, Any] = field(default_factory=dict)


# ──────────────────────────────────────────────────────────────────────────────
# RunReport
# ──────────────────────────────────────────────────────────────────────────────

@dataclass
class RunReport:
    algo: str
    family: str
    params: Dict[str, Any]
    n: int
    m: int
    passes: int
    retries: int
    rounds: int
    spanner_edges: int
    max_stretch: Optional[float]
    witness_edge: Optional[List[int]]
    declared_bound: Optional[float]
    peak_words: int
    max_bits_per_player_per_round: int
    charging: List[str]
    verified: bool
    wall_ms: float = 0.0
    details: Dict[str, Any] = field(default_factory=dict)

    @staticmethod
    def judge(max_stretch: Optional[float], declared_bound: Optional[float]) -> bool:
        """True iff the oracle produced a finite stretch within the declared bound."""
        if max_stretch is None or declared_bound is None:
            return False
        return max_stretch <= declared_bound + 1e-9

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def canonical_json(self) -> str:
        """JSON without ``wall_ms``; identical across reruns with the same inputs."""
        data = self.to_dict()
        data.pop("wall_ms", None)
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunReport":
        try:
            return cls(**data)
        except TypeError as exc:
            raise InputError(f"malformed run report: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))


def stretch_fields(max_stretch: float, witness: Optional[Edge]) -> Tuple[Optional[float], Optional[List[int]]]:
    value = float(max_stretch) if math.isfinite(max_stretch) else None
    return value, (list(witness) if witness is not None else None)


# ──────────────────────────────────────────────────────────────────────────────
# Regression bounds
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class RegressionBound:
    constant: float
    provenance: str = ""


@dataclass(frozen=True)
class RegressionCheck:
    key: str
    value: float
    limit: Optional[float]

    @property
    def ok(self) -> bool:
        return self.limit is None or self.value <= self.limit


class RegressionStore:
    """
    ``family/algo/metric`` → frozen constant. A family of ``*`` is the
    fallback for every family without its own entry.
    """

    def __init__(self, bounds: Optional[Dict[str, RegressionBound]] = None, path: Optional[Path] = None):
        self.bounds: Dict[str, RegressionBound] = dict(bounds or {})
        self.path = path

    @staticmethod
    def key(family: str, algo: str, metric: str) -> str:
        return f"{family}/{algo}/{metric}"

    @classmethod
    def load(cls, path: str | Path) -> "RegressionStore":
        p = Path(path)
        if not p.exists():
            logger.warning("regression store %s not found; no bounds loaded", p)
            return cls(path=p)
        raw = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        bounds: Dict[str, RegressionBound] = {}
        for key, entry in (raw.get("bounds", {}) or {}).items():
            if key.count("/") != 2:
                raise ValueError(f"regression key {key!r} must look like family/algo/metric")
            entry = entry or {}
            bounds[key] = RegressionBound(
                constant=float(entry["constant"]),
                provenance=str(entry.get("provenance", "")),
            )
        return cls(bounds, p)

    def save(self, path: Optional[str | Path] = None) -> None:
        target = Path(path or self.path)
        data = {
            "bounds": {
                k: {"constant": b.constant, "provenance": b.provenance}
                for k, b in sorted(self.bounds.items())
            }
        }
        target.write_text(yaml.safe_dump(data, sort_keys=True), encoding="utf-8")

    def lookup(self, family: str, algo: str, metric: str) -> Optional[RegressionBound]:
        for fam in (family, WILDCARD):
            bound = self.bounds.get(self.key(fam, algo, metric))
            if bound is not None:
                return bound
        return None

    def limit(self, family: str, algo: str, metric: str, scale: float) -> Optional[float]:
        bound = self.lookup(family, algo, metric)
        return None if bound is None else bound.constant * scale

    def check(self, family: str, algo: str, metric: str, value: float, scale: float = 1.0) -> RegressionCheck:
        return RegressionCheck(self.key(family, algo, metric), float(value), self.limit(family, algo, metric, scale))

    def tighten(self, family: str, algo: str, metric: str, constant: float, provenance: str) -> None:
        """Replace a bound with a smaller one; loosening is refused."""
        key = self.key(family, algo, metric)
        current = self.bounds.get(key)
        if current is not None and constant > current.constant:
            raise ValueError(f"{key}: refusing to loosen {current.constant} to {constant}")
        self.bounds[key] = RegressionBound(constant, provenance)
