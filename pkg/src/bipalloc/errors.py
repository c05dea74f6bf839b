"""Exception types shared across the package."""

from __future__ import annotations


class BipallocError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(BipallocError):
    """Matrix or vector sizes do not agree with the declared node counts."""


class NonPositiveDistance(BipallocError):
    """An edge distance is zero, negative, or not finite."""


class NegativeCapacity(BipallocError):
    """A producer capacity is negative."""


class Infeasible(BipallocError):
    """Total demand cannot be routed given live edges, capacities, and pins."""


class TooLarge(BipallocError):
    """Exhaustive enumeration bound exceeded in the brute-force oracle."""


class NoAvailableEdge(BipallocError):
    """A selection context holds no live edge with spare producer capacity."""


class InsufficientCapacity(BipallocError):
    """An allocation ran out of usable edges before the amount was placed."""


class InvalidSpec(BipallocError):
    """A generator or benchmark specification fails its own constraints."""


class InstanceSyntaxError(BipallocError):
    """Malformed instance text; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class InconsistentCounts(BipallocError):
    """Instance text disagrees with its own declared section sizes."""


class EmptySeries(BipallocError):
    """Competitive statistics requested for an empty record list."""
