"""Deterministic workload generation and the plain-text instance format.

Generation is a pure function of its spec: every value comes from one
SplitMix64 stream seeded by the spec, drawn in a fixed order (distances
row-major, then capacities, then demands, then failures), so identical
specs yield identical bytes on any platform.

The on-disk format (also consumed by the CLI) looks like::

    no of consumers: 2
    no of producers: 2
    edge distances
    47
    17
    11
    2
    producer capacities
    26
    839
    consumer demands
    97
    78
    Number of edge failures: 1
    1
    3

Demand of consumer i arrives at step i. Each failure contributes two lines:
the 1-based demand ordinal it follows, then the 1-based flat edge ordinal.
Inline annotations starting with ``<-`` are treated as comments and
stripped; the writer emits the canonical form without them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InconsistentCounts, InstanceSyntaxError, InvalidSpec
from .model import EdgeId, FailureEvent, ProblemInstance, ServiceTrace
from .offline import format_number
from .rng import SplitMix64

MERSENNE_PRIME_61 = (1 << 61) - 1


@dataclass(frozen=True)
class HashParams:
    """One member of the pairwise-independent family ((a*x + b) mod p) mod m."""

    a: int
    b: int
    m: int
    p: int = MERSENNE_PRIME_61

    def __post_init__(self):
        if not 1 <= self.a < self.p:
            raise InvalidSpec(f"hash multiplier a={self.a} outside [1, p)")
        if not 0 <= self.b < self.p:
            raise InvalidSpec(f"hash offset b={self.b} outside [0, p)")
        if self.m < 1:
            raise InvalidSpec(f"hash modulus m={self.m} must be >= 1")


def pairwise_hash(params: HashParams, x: int) -> int:
    """((a*x + b) mod p) mod m; Python integers make overflow a non-issue."""
    if x < 0:
        raise ValueError(f"hash input must be non-negative, got {x}")
    return ((params.a * x + params.b) % params.p) % params.m


@dataclass(frozen=True)
class GenSpec:
    """Everything needed to generate one (instance, trace) pair."""

    num_consumers: int
    num_producers: int
    distance_range: tuple = (1, 100)
    capacity_range: tuple = (10, 100)
    demand_range: tuple = (1, 50)
    demand_order: str = "uniform"  # uniform | ascending | hash_stream
    failure_count: int = 0
    seed: int = 0


def _check_spec(spec: GenSpec) -> None:
    if spec.num_consumers < 1 or spec.num_producers < 1:
        raise InvalidSpec(
            f"need at least one consumer and producer, got "
            f"{spec.num_consumers}x{spec.num_producers}"
        )
    for name, (lo, hi) in (
        ("distance_range", spec.distance_range),
        ("capacity_range", spec.capacity_range),
        ("demand_range", spec.demand_range),
    ):
        if hi < lo:
            raise InvalidSpec(f"{name} [{lo}, {hi}] is empty")
        if lo < 0:
            raise InvalidSpec(f"{name} lower bound {lo} is negative")
    if spec.distance_range[0] < 1:
        raise InvalidSpec("distances need a positive lower bound")
    if spec.demand_order not in ("uniform", "ascending", "hash_stream"):
        raise InvalidSpec(f"unknown demand order {spec.demand_order!r}")
    if spec.failure_count < 0:
        raise InvalidSpec(f"failure_count {spec.failure_count} is negative")
    if spec.failure_count > spec.num_consumers * spec.num_producers:
        raise InvalidSpec(
            f"failure_count {spec.failure_count} exceeds the "
            f"{spec.num_consumers * spec.num_producers} edges available"
        )


def generate(spec: GenSpec):
    """Deterministically produce a feasible (ProblemInstance, ServiceTrace).

    Feasibility for the full demand set before failures is guaranteed: when
    total demand exceeds total capacity, capacities are scaled up by
    ceil(total_demand / total_capacity).
    """
    _check_spec(spec)
    n, m = spec.num_consumers, spec.num_producers
    rng = SplitMix64(spec.seed)

    if spec.demand_order == "hash_stream":
        a = 1 + rng.randrange(MERSENNE_PRIME_61 - 1)
        b = rng.randrange(MERSENNE_PRIME_61)
        counter = [0]

        def draw(lo, hi):
            params = HashParams(a=a, b=b, m=hi - lo + 1)
            value = lo + pairwise_hash(params, counter[0])
            counter[0] += 1
            return value

    else:

        def draw(lo, hi):
            return rng.randint(lo, hi)

    distances = [
        draw(*spec.distance_range) for _ in range(n * m)
    ]
    capacities = [draw(*spec.capacity_range) for _ in range(m)]
    amounts = [draw(*spec.demand_range) for _ in range(n)]
    if spec.demand_order == "ascending":
        amounts.sort()

    failures = []
    used_edges = set()
    for _ in range(spec.failure_count):
        after = draw(1, n)
        flat = None
        for _attempt in range(64 * n * m):
            candidate = draw(1, n * m)
            if candidate not in used_edges:
                flat = candidate
                break
        if flat is None:  # degenerate stream: fall back to first free edge
            flat = next(e for e in range(1, n * m + 1) if e not in used_edges)
        used_edges.add(flat)
        failures.append(FailureEvent(after, EdgeId.from_flat(flat, m)))

    total_demand = sum(amounts)
    total_capacity = sum(capacities)
    if total_demand > total_capacity:
        if total_capacity == 0:
            raise InvalidSpec(
                "cannot rescale all-zero capacities to cover positive demand"
            )
        scale = math.ceil(total_demand / total_capacity)
        capacities = [c * scale for c in capacities]

    instance = ProblemInstance(n, m, distances, capacities)
    trace = ServiceTrace(
        demands=[(i, float(amounts[i])) for i in range(n)],
        failures=failures,
    )
    return instance, trace


def _strip_comment(line: str) -> str:
    cut = line.find("<-")
    if cut >= 0:
        line = line[:cut]
    return line.strip()


class _Cursor:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next_line(self):
        while self.pos < len(self.lines):
            raw = _strip_comment(self.lines[self.pos])
            self.pos += 1
            if raw:
                return raw, self.pos
        return None, self.pos

    def expect_header(self, header: str) -> str:
        line, lineno = self.next_line()
        if line is None:
            raise InstanceSyntaxError(f"expected {header!r}, found end of file", lineno)
        return line

    def read_number(self, what: str) -> float:
        line, lineno = self.next_line()
        if line is None:
            raise InconsistentCounts(f"missing {what} at end of file")
        try:
            return float(line)
        except ValueError:
            raise InconsistentCounts(
                f"expected {what} on line {lineno}, found {line!r}"
            ) from None


def _parse_count_header(line: str, prefix: str, lineno: int) -> int:
    if not line.startswith(prefix):
        raise InstanceSyntaxError(f"expected {prefix!r}, found {line!r}", lineno)
    tail = line[len(prefix):].strip()
    try:
        return int(tail)
    except ValueError:
        raise InstanceSyntaxError(f"bad count {tail!r} after {prefix!r}", lineno) from None


def parse_instance(text: str):
    """Parse instance text into (ProblemInstance, ServiceTrace).

    Raises InstanceSyntaxError (with line number) on malformed structure and
    InconsistentCounts when sections disagree with the declared sizes.
    """
    cur = _Cursor(text)

    line, lineno = cur.next_line()
    if line is None:
        raise InstanceSyntaxError("empty input", lineno)
    n = _parse_count_header(line, "no of consumers:", lineno)
    line, lineno = cur.next_line()
    n_prod = _parse_count_header(
        line if line is not None else "", "no of producers:", lineno
    )
    if n < 1 or n_prod < 1:
        raise InconsistentCounts(
            f"need at least one consumer and one producer, got {n}x{n_prod}"
        )

    header = cur.expect_header("edge distances")
    if header != "edge distances":
        raise InstanceSyntaxError(
            f"expected 'edge distances', found {header!r}", cur.pos
        )
    distances = [cur.read_number("edge distance") for _ in range(n * n_prod)]

    header = cur.expect_header("producer capacities")
    if header != "producer capacities":
        raise InconsistentCounts(
            f"expected 'producer capacities' after {n * n_prod} distances, "
            f"found {header!r}"
        )
    capacities = [cur.read_number("producer capacity") for _ in range(n_prod)]

    header = cur.expect_header("consumer demands")
    if header != "consumer demands":
        raise InconsistentCounts(
            f"expected 'consumer demands' after {n_prod} capacities, "
            f"found {header!r}"
        )
    demands = [cur.read_number("consumer demand") for _ in range(n)]

    line, lineno = cur.next_line()
    if line is None:
        raise InstanceSyntaxError(
            "expected 'Number of edge failures:', found end of file", lineno
        )
    if not line.startswith("Number of edge failures:"):
        raise InconsistentCounts(
            f"expected 'Number of edge failures:' after {n} demands, "
            f"found {line!r}"
        )
    failure_count = _parse_count_header(line, "Number of edge failures:", lineno)
    if failure_count < 0:
        raise InconsistentCounts(f"negative failure count {failure_count}")

    failures = []
    for _ in range(failure_count):
        after = cur.read_number("failure demand ordinal")
        flat = cur.read_number("failure edge ordinal")
        if after != int(after) or flat != int(flat):
            raise InconsistentCounts(
                f"failure ordinals must be integers, got ({after}, {flat})"
            )
        after, flat = int(after), int(flat)
        if not 1 <= after <= n:
            raise InconsistentCounts(
                f"failure demand ordinal {after} outside [1, {n}]"
            )
        if not 1 <= flat <= n * n_prod:
            raise InconsistentCounts(
                f"failure edge ordinal {flat} outside [1, {n * n_prod}]"
            )
        failures.append(FailureEvent(after, EdgeId.from_flat(flat, n_prod)))

    trailing, lineno = cur.next_line()
    if trailing is not None:
        raise InconsistentCounts(
            f"unexpected content after the failure section: {trailing!r}"
        )

    instance = ProblemInstance(n, n_prod, distances, capacities)
    trace = ServiceTrace(
        demands=[(i, demands[i]) for i in range(n)], failures=failures
    )
    return instance, trace


def write_instance(instance: ProblemInstance, trace: ServiceTrace) -> str:
    """Canonical text form; parse_instance(write_instance(...)) round-trips.

    The format fixes arrival order to consumer index order, so the trace
    must list demands as consumer 0, 1, 2, ...
    """
    trace.validate_for(instance)
    if len(trace.demands) != instance.num_consumers:
        raise InvalidSpec(
            "the text format needs one demand per consumer; got "
            f"{len(trace.demands)} demands for {instance.num_consumers} "
            "consumers"
        )
    for position, (consumer, _) in enumerate(trace.demands):
        if consumer != position:
            raise InvalidSpec(
                "the text format can only express traces whose demands "
                f"arrive in consumer index order; demand {position + 1} "
                f"names consumer {consumer}"
            )
    n, m = instance.num_consumers, instance.num_producers
    lines = [f"no of consumers: {n}", f"no of producers: {m}", "edge distances"]
    for i in range(n):
        for j in range(m):
            lines.append(format_number(instance.distance(i, j)))
    lines.append("producer capacities")
    lines.extend(format_number(c) for c in instance.capacities)
    lines.append("consumer demands")
    lines.extend(format_number(amount) for _, amount in trace.demands)
    lines.append(f"Number of edge failures: {len(trace.failures)}")
    for event in trace.failures:
        lines.append(str(event.after_demand))
        lines.append(str(event.edge.flat(m)))
    return "\n".join(lines) + "\n"
