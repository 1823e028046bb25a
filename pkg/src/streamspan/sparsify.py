"""
streamspan.sparsify
~~~~~~~~~~~~~~~~~~~
Spectral sparsification by effective-resistance sampling, plus the
verifiers used to check sparsifiers (quadratic forms, exact generalized
eigenvalues, resistance-vs-distance profiles).

The sampler runs on a materialized graph with exact resistances. Inside a
streaming algorithm the scheduler is charged a fixed black-box sketch budget
(``blackbox_sparsifier_words``) for it instead.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla

from .errors import ParameterError
from .graph import (
    AnyGraph,
    Edge,
    ResistanceOracle,
    UnweightedGraph,
    WeightedGraph,
    as_weighted,
    pair_distances,
)
from .utils.seeding import rng_for

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1.0 / 18.0
DEFAULT_OVERSAMPLE = 4.0
SPECTRAL_MARGIN = 1.2
EXACT_EIGEN_LIMIT = 300
DEFAULT_TRIALS = 64

_NULL_TOL = 1e-9


@dataclass(frozen=True)
class SparsifierParams:
    eps: float = DEFAULT_EPS
    oversample: float = DEFAULT_OVERSAMPLE
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.eps <= DEFAULT_EPS + 1e-15:
            raise ParameterError(f"eps must lie in (0, 1/18], got {self.eps}")
        if not self.oversample > 0:
            raise ParameterError(f"oversample constant must be positive, got {self.oversample}")

    def scale(self, n: int) -> float:
        """C·ε⁻²·log₂ n, the factor multiplying R_e in the keep probability."""
        return self.oversample * self.eps ** -2 * math.log2(max(n, 2))

    def with_seed(self, seed: int) -> "SparsifierParams":
        return SparsifierParams(eps=self.eps, oversample=self.oversample, seed=seed)


def blackbox_sparsifier_words(n: int, params: SparsifierParams) -> int:
    """Space charged for one streaming sparsifier sketch on n vertices."""
    if n < 2:
        return 0
    return math.ceil(params.oversample * n * params.eps ** -2 * math.log2(n))


# ──────────────────────────────────────────────────────────────────────────────
# Sampling
# ──────────────────────────────────────────────────────────────────────────────

def sample_by_resistance(
    g: UnweightedGraph,
    scale: float,
    seed: int,
    resistances: Optional[np.ndarray] = None,
) -> WeightedGraph:
    """
    Keep each edge independently with p_e = min(scale·R_e, 1) at weight 1/p_e.

    Coins are drawn in sorted-edge order, so the output is a function of
    (g, scale, seed).
    """
    if g.m == 0:
        return WeightedGraph(g.n, {})
    edges = g.sorted_edges
    if resistances is None:
        resistances = ResistanceOracle(g).edge_resistances()
    prob = np.minimum(scale * np.clip(resistances, 0.0, None), 1.0)
    keep = rng_for(seed, "sparsify").random(len(edges)) < prob
    weights = {edges[i]: 1.0 / float(prob[i]) for i in np.flatnonzero(keep)}
    logger.debug("sampled %d of %d edges at scale %.3g", len(weights), g.m, scale)
    return WeightedGraph(g.n, weights)


def spectral_sparsify(g: UnweightedGraph, params: Optional[SparsifierParams] = None) -> WeightedGraph:
    params = params or SparsifierParams()
    return sample_by_resistance(g, params.scale(g.n), params.seed)


def unweight(h: WeightedGraph) -> UnweightedGraph:
    return h.unweighted()


# ──────────────────────────────────────────────────────────────────────────────
# Verification
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SpectralReport:
    passed: bool
    worst_ratio: float
    min_ratio: float
    max_ratio: float
    margin: float
    exact: bool


def _edge_forms(lap, edges: Tuple[Edge, ...]) -> np.ndarray:
    if not edges:
        return np.zeros(0)
    arr = np.asarray(edges, dtype=np.int64)
    u, v = arr[:, 0], arr[:, 1]
    diag = lap.diagonal()
    off = np.asarray(lap[u, v]).ravel()
    return diag[u] + diag[v] - 2.0 * off


def _ratios(q_h: np.ndarray, q_g: np.ndarray) -> np.ndarray:
    null_g = q_g <= _NULL_TOL
    null_h = q_h <= _NULL_TOL
    ratios = np.ones_like(q_g)
    live = ~null_g
    ratios[live] = q_h[live] / q_g[live]
    ratios[null_g & ~null_h] = np.inf
    return ratios


def _exact_ratios(lap_g, lap_h, n: int) -> Optional[np.ndarray]:
    """Generalized eigenvalues of (L_h, L_g) off the all-ones direction."""
    basis = sla.null_space(np.ones((1, n)))
    a = basis.T @ lap_g.toarray() @ basis
    b = basis.T @ lap_h.toarray() @ basis
    try:
        return sla.eigh(b, a, eigvals_only=True)
    except np.linalg.LinAlgError:
        return None


def verify_spectral(
    g: AnyGraph,
    h: WeightedGraph,
    eps: float,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    exact: bool = False,
) -> SpectralReport:
    """
    Check xᵀL_h x / xᵀL_g x ∈ [1 - 1.2·eps, 1 + 1.2·eps] over ``trials``
    Gaussian vectors and every edge vector b_uv of g.

    ``exact=True`` (n ≤ 300, g connected) replaces the sampled vectors with
    the full generalized spectrum.
    """
    wg = as_weighted(g)
    if wg.n != h.n:
        raise ParameterError(f"vertex counts differ: {wg.n} vs {h.n}")
    margin = SPECTRAL_MARGIN * eps
    lap_g = wg.laplacian()
    lap_h = h.laplacian()

    ratios = _ratios(_edge_forms(lap_h, wg.sorted_edges), _edge_forms(lap_g, wg.sorted_edges))
    used_exact = False
    if exact and 2 <= wg.n <= EXACT_EIGEN_LIMIT and ResistanceOracle(wg).components == 1:
        spectrum = _exact_ratios(lap_g, lap_h, wg.n)
        if spectrum is not None:
            ratios = np.concatenate([ratios, spectrum])
            used_exact = True
    if not used_exact and trials > 0 and wg.n > 0:
        x = rng_for(seed, "verify-spectral").standard_normal((wg.n, trials))
        q_g = np.einsum("ij,ij->j", x, lap_g @ x)
        q_h = np.einsum("ij,ij->j", x, lap_h @ x)
        ratios = np.concatenate([ratios, _ratios(q_h, q_g)])

    if ratios.size == 0:
        return SpectralReport(True, 1.0, 1.0, 1.0, margin, used_exact)
    deviation = np.abs(ratios - 1.0)
    worst = float(ratios[int(np.argmax(deviation))])
    return SpectralReport(
        passed=bool(np.all(deviation <= margin)),
        worst_ratio=worst,
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        margin=margin,
        exact=used_exact,
    )


# ──────────────────────────────────────────────────────────────────────────────
# Resistance vs. spanner distance
# ──────────────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ResistanceProfile:
    n: int
    m: int
    edges: Tuple[Edge, ...]
    distances: np.ndarray
    resistances: np.ndarray

    def cubic_constant(self) -> float:
        """min over stretched edges of R·n²·log²n / d³."""
        return self._min_ratio(self.n ** 2 * math.log2(max(self.n, 2)) ** 2, 3)

    def edge_constant(self) -> float:
        """min over stretched edges of R·m·log n / d²."""
        return self._min_ratio(max(self.m, 1) * math.log2(max(self.n, 2)), 2)

    def _min_ratio(self, factor: float, power: int) -> float:
        mask = np.isfinite(self.distances) & (self.distances > 1)
        if not mask.any():
            return math.inf
        return float(np.min(self.resistances[mask] * factor / self.distances[mask] ** power))


def resistance_stretch_profile(g: UnweightedGraph, spanner: UnweightedGraph) -> ResistanceProfile:
    """Per edge of g: its distance in ``spanner`` and its resistance in g."""
    edges = g.sorted_edges
    dist = pair_distances(spanner, edges)
    distances = np.array([dist[e] for e in edges], dtype=float)
    resistances = ResistanceOracle(g).edge_resistances() if edges else np.zeros(0)
    return ResistanceProfile(g.n, g.m, edges, distances, resistances)
