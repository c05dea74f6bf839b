"""Core domain types: instances, traces, live allocation state, and the
feasibility validator used as the test oracle by every other module.

Conventions
-----------
Consumers and producers are 0-indexed everywhere in memory. The on-disk
instance format and the LP variable numbering are 1-based; ``EdgeId.flat``
bridges the two with the row-major ordinal ``consumer*num_producers +
producer + 1``.

Weights and amounts are double-precision reals. Feasibility comparisons use
an absolute tolerance of 1e-9 scaled by ``max(1, magnitude)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DimensionMismatch, NegativeCapacity, NonPositiveDistance

TOL = 1e-9


def close(a: float, b: float, tol: float = TOL) -> bool:
    """True when a and b agree within tol scaled by max(1, |a|, |b|)."""
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


@dataclass(frozen=True, order=True)
class EdgeId:
    """One directed consumer-to-producer edge, identified by 0-based indices."""

    consumer: int
    producer: int

    def flat(self, num_producers: int) -> int:
        """1-based row-major ordinal, matching LP variable numbering."""
        return self.consumer * num_producers + self.producer + 1

    @classmethod
    def from_flat(cls, flat: int, num_producers: int) -> "EdgeId":
        if flat < 1:
            raise ValueError(f"flat edge ordinal must be >= 1, got {flat}")
        return cls((flat - 1) // num_producers, (flat - 1) % num_producers)


@dataclass
class ProblemInstance:
    """Static bipartite topology: distances, producer capacities, node counts.

    ``distances`` accepts either a flat row-major sequence of length
    num_consumers*num_producers or a nested list of rows; it is stored as a
    tuple of row tuples. All distances must be positive and finite (a failed
    edge is runtime state, never instance state); capacities must be >= 0.
    """

    num_consumers: int
    num_producers: int
    distances: tuple
    capacities: tuple

    def __post_init__(self):
        n, m = self.num_consumers, self.num_producers
        if n < 1 or m < 1:
            raise DimensionMismatch(
                f"need at least one consumer and one producer, got {n}x{m}"
            )
        rows = self._normalize_distances(list(self.distances), n, m)
        for i, row in enumerate(rows):
            for j, d in enumerate(row):
                if not math.isfinite(d) or d <= 0.0:
                    raise NonPositiveDistance(
                        f"distance at (consumer {i}, producer {j}) is {d}; "
                        "distances must be positive and finite"
                    )
        caps = [float(c) for c in self.capacities]
        if len(caps) != m:
            raise DimensionMismatch(
                f"expected {m} capacities, got {len(caps)}"
            )
        for j, c in enumerate(caps):
            if c < 0.0:
                raise NegativeCapacity(f"capacity of producer {j} is {c}")
        self.distances = tuple(tuple(row) for row in rows)
        self.capacities = tuple(caps)

    @staticmethod
    def _normalize_distances(raw, n, m):
        if len(raw) == n and all(
            hasattr(row, "__len__") and not isinstance(row, (str, bytes))
            for row in raw
        ):
            rows = [[float(v) for v in row] for row in raw]
            if any(len(row) != m for row in rows):
                raise DimensionMismatch(
                    f"distance rows must each have {m} entries"
                )
            return rows
        flat = [float(v) for v in raw]
        if len(flat) != n * m:
            raise DimensionMismatch(
                f"expected {n * m} distances for a {n}x{m} instance, "
                f"got {len(flat)}"
            )
        return [flat[i * m:(i + 1) * m] for i in range(n)]

    def distance(self, consumer: int, producer: int) -> float:
        return self.distances[consumer][producer]

    def edges(self):
        """All edges in flat (row-major) order."""
        for i in range(self.num_consumers):
            for j in range(self.num_producers):
                yield EdgeId(i, j)


@dataclass(frozen=True)
class FailureEvent:
    """An edge failure fired after the demand with 1-based ordinal after_demand."""

    after_demand: int
    edge: EdgeId


@dataclass
class ServiceTrace:
    """Ordered demands (one per consumer) plus failure events keyed to them."""

    demands: list  # list of (consumer index, amount)
    failures: list = field(default_factory=list)  # list of FailureEvent

    def __post_init__(self):
        self.demands = [(int(c), float(a)) for c, a in self.demands]
        self.failures = list(self.failures)

    def validate_for(self, instance: ProblemInstance) -> None:
        """Raise ValueError unless this trace fits the instance.

        A consumer may appear at most once; traces covering only a subset of
        consumers (including the empty trace) are valid prefixes, with the
        missing consumers contributing zero demand.
        """
        n, m = instance.num_consumers, instance.num_producers
        seen = set()
        for c, a in self.demands:
            if not 0 <= c < n:
                raise ValueError(f"demand names unknown consumer {c}")
            if c in seen:
                raise ValueError(f"consumer {c} appears twice in the trace")
            if a < 0 or not math.isfinite(a):
                raise ValueError(f"demand amount {a} for consumer {c}")
            seen.add(c)
        for ev in self.failures:
            if not 1 <= ev.after_demand <= len(self.demands):
                raise ValueError(
                    f"failure ordinal {ev.after_demand} outside "
                    f"[1, {len(self.demands)}]"
                )
            if not (0 <= ev.edge.consumer < n and 0 <= ev.edge.producer < m):
                raise ValueError(f"failure names unknown edge {ev.edge}")


def total_cost(instance: ProblemInstance, weights) -> float:
    """Sum of distance * weight over the whole matrix."""
    return sum(
        instance.distance(i, j) * weights[i][j]
        for i in range(instance.num_consumers)
        for j in range(instance.num_producers)
    )


@dataclass
class AllocationState:
    """Live weights, edge-alive flags, spare producer capacity, and totals.

    Invariants (checked by :func:`validate`): weights are non-negative, dead
    edges carry zero weight, column sums never exceed capacities, row sums
    equal ``satisfied``, and ``cumulative_cost`` tracks the recomputed cost.
    """

    instance: ProblemInstance
    weights: list
    alive: list
    remaining_capacity: list
    satisfied: list
    cumulative_cost: float = 0.0

    @classmethod
    def initial(cls, instance: ProblemInstance) -> "AllocationState":
        n, m = instance.num_consumers, instance.num_producers
        return cls(
            instance=instance,
            weights=[[0.0] * m for _ in range(n)],
            alive=[[True] * m for _ in range(n)],
            remaining_capacity=list(instance.capacities),
            satisfied=[0.0] * n,
            cumulative_cost=0.0,
        )

    @classmethod
    def from_weights(cls, instance, weights, alive=None) -> "AllocationState":
        """Build a consistent state around an explicit weight matrix."""
        n, m = instance.num_consumers, instance.num_producers
        w = [[float(weights[i][j]) for j in range(m)] for i in range(n)]
        a = (
            [[bool(alive[i][j]) for j in range(m)] for i in range(n)]
            if alive is not None
            else [[True] * m for _ in range(n)]
        )
        remaining = [
            instance.capacities[j] - sum(w[i][j] for i in range(n))
            for j in range(m)
        ]
        return cls(
            instance=instance,
            weights=w,
            alive=a,
            remaining_capacity=remaining,
            satisfied=[sum(row) for row in w],
            cumulative_cost=total_cost(instance, w),
        )

    def copy(self) -> "AllocationState":
        return AllocationState(
            instance=self.instance,
            weights=[row[:] for row in self.weights],
            alive=[row[:] for row in self.alive],
            remaining_capacity=self.remaining_capacity[:],
            satisfied=self.satisfied[:],
            cumulative_cost=self.cumulative_cost,
        )

    def restore(self, snapshot: "AllocationState") -> None:
        """Overwrite this state in place from a snapshot taken with copy()."""
        self.weights = [row[:] for row in snapshot.weights]
        self.alive = [row[:] for row in snapshot.alive]
        self.remaining_capacity = snapshot.remaining_capacity[:]
        self.satisfied = snapshot.satisfied[:]
        self.cumulative_cost = snapshot.cumulative_cost

    def add_weight(self, edge: EdgeId, amount: float) -> None:
        """Apply one allocation delta, keeping the running totals in sync."""
        i, j = edge.consumer, edge.producer
        self.weights[i][j] += amount
        self.remaining_capacity[j] -= amount
        self.satisfied[i] += amount
        self.cumulative_cost += amount * self.instance.distance(i, j)


@dataclass(frozen=True)
class Violation:
    """One broken constraint: its name and the offending index.

    Kinds: demand-shortfall, capacity-excess, negative-weight,
    dead-edge-weight, plus cost-drift when the running total disagrees with
    the recomputed cost.
    """

    kind: str
    index: tuple
    detail: str


def validate(instance, state, expected_satisfied) -> list:
    """Check every AllocationState invariant plus the expected per-consumer
    delivery. Returns an empty list when the state is consistent; otherwise
    one Violation per broken constraint. Violations are the return value,
    never exceptions.
    """
    n, m = instance.num_consumers, instance.num_producers
    out = []
    for i in range(n):
        for j in range(m):
            w = state.weights[i][j]
            if w < -TOL:
                out.append(Violation("negative-weight", (i, j), f"w={w}"))
            if not state.alive[i][j] and abs(w) > TOL:
                out.append(
                    Violation("dead-edge-weight", (i, j), f"w={w} on dead edge")
                )
    for j in range(m):
        col = sum(state.weights[i][j] for i in range(n))
        cap = instance.capacities[j]
        if col > cap + TOL * max(1.0, cap):
            out.append(
                Violation("capacity-excess", (j,), f"{col} > capacity {cap}")
            )
        if not close(state.remaining_capacity[j], cap - col):
            out.append(
                Violation(
                    "capacity-excess",
                    (j,),
                    f"remaining {state.remaining_capacity[j]} != {cap - col}",
                )
            )
    for i in range(n):
        row = sum(state.weights[i][j] for j in range(m))
        if not close(row, state.satisfied[i]):
            out.append(
                Violation(
                    "demand-shortfall",
                    (i,),
                    f"row sum {row} != satisfied {state.satisfied[i]}",
                )
            )
        if not close(row, expected_satisfied[i]):
            out.append(
                Violation(
                    "demand-shortfall",
                    (i,),
                    f"delivered {row} != expected {expected_satisfied[i]}",
                )
            )
    recomputed = total_cost(instance, state.weights)
    if not close(state.cumulative_cost, recomputed):
        out.append(
            Violation(
                "cost-drift",
                (),
                f"cumulative_cost {state.cumulative_cost} != {recomputed}",
            )
        )
    return out


@dataclass(frozen=True)
class StepRecord:
    """Cumulative costs for the policy and the offline optimum after one step.

    Synthetic records come from internal re-demands triggered by edge
    failures; they reuse the 1-based ordinal of the demand they follow so
    real steps keep matching the trace.
    """

    step: int
    consumer: int
    demand: float
    synthetic: bool
    policy_cost: float
    opt_cost: float
    ratio: float


def cost_ratio(policy_cost: float, opt_cost: float) -> float:
    """policy/opt, defined as 1 when the optimum is still zero."""
    if abs(opt_cost) <= TOL:
        return 1.0
    return policy_cost / opt_cost
