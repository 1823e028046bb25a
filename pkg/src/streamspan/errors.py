"""
streamspan.errors
~~~~~~~~~~~~~~~~~
Exception hierarchy.

Sketch outcomes (EMPTY, FAIL, OVERFLOW, NONE) are values, not exceptions; the
classes here are for bad inputs, misuse and exhausted randomness.
"""
from __future__ import annotations


class StreamSpanError(Exception):
    """Base class for every error raised by streamspan."""


# ── Input errors (CLI exit code 2) ───────────────────────────────────────────

class InputError(StreamSpanError, ValueError):
    pass


class SubgraphViolation(InputError):
    """A claimed spanner contains an edge the base graph does not have."""

    def __init__(self, edge: tuple[int, int]):
        super().__init__(f"edge {edge} is not present in the base graph")
        self.edge = edge


class ParameterError(InputError):
    pass


class IncompatibleSketch(InputError):
    pass


# ── Misuse ───────────────────────────────────────────────────────────────────

class UsageError(StreamSpanError, RuntimeError):
    pass


class FirewallViolation(UsageError):
    """A simulated player tried to read another player's neighborhood."""


class GenerationError(StreamSpanError, RuntimeError):
    pass


# ── Randomness / budget (CLI exit code 3) ────────────────────────────────────

class RandomnessExhausted(StreamSpanError, RuntimeError):
    pass


class PeelingFailed(RandomnessExhausted):
    def __init__(self, step: int, vertex: int):
        super().__init__(f"sketch decode failed at peel step {step} (vertex {vertex})")
        self.step = step
        self.vertex = vertex


class BudgetExceeded(StreamSpanError, RuntimeError):
    pass
