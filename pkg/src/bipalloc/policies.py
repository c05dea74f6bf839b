"""Online edge-selection policies behind one selector interface.

A selector maps a SelectionContext (the demanding consumer's live edges with
spare producer capacity) to a single EdgeId. Demand splitting across
producers is handled outside the selectors by allocate_demand, which
re-invokes the selector on the reduced context whenever the chosen producer
runs out of capacity; the whole call is transactional.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InsufficientCapacity, NoAvailableEdge
from .model import AllocationState, EdgeId, ProblemInstance

_CAP_EPS = 1e-12


@dataclass(frozen=True)
class PolicyConfig:
    """Knobs shared by every policy.

    beta is the acceptance factor for costlier-than-greedy edges (>= 1; at
    exactly 1 the randomized policy degenerates to greedy). k bounds the
    candidate set (default min(4, num_producers)); max_iterations bounds the
    sampling loop (default k). runs only matters for the derandomized
    best-of-m wrapper, whose run r is seeded with seed + r.
    """

    kind: str = "greedy"  # greedy | randomized | derandomized | proportional
    beta: float = 1.0
    k: int | None = None
    max_iterations: int | None = None
    seed: int = 0
    runs: int = 1

    def __post_init__(self):
        if self.kind not in ("greedy", "randomized", "derandomized", "proportional"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.beta < 1.0:
            raise ValueError(f"beta must be >= 1, got {self.beta}")
        if self.k is not None and self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")

    def effective_k(self, num_producers: int) -> int:
        return self.k if self.k is not None else min(4, num_producers)

    def effective_iterations(self, num_producers: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return self.effective_k(num_producers)


@dataclass(frozen=True)
class SelectionContext:
    """One consumer's usable edges: alive and with spare producer capacity."""

    consumer: int
    edges: tuple  # of EdgeId
    distances: tuple  # aligned with edges
    available: tuple  # spare producer capacity aligned with edges

    def distance_of(self, edge: EdgeId) -> float:
        return self.distances[self.edges.index(edge)]


def selection_context(state: AllocationState, consumer: int) -> SelectionContext:
    inst = state.instance
    edges, dists, avail = [], [], []
    for j in range(inst.num_producers):
        if state.alive[consumer][j] and state.remaining_capacity[j] > _CAP_EPS:
            edges.append(EdgeId(consumer, j))
            dists.append(inst.distance(consumer, j))
            avail.append(state.remaining_capacity[j])
    return SelectionContext(consumer, tuple(edges), tuple(dists), tuple(avail))


def find_top_avail(context: SelectionContext, k: int) -> list:
    """The k cheapest usable edges, ascending by distance, ties broken by
    ascending producer index. Fewer than k are returned when fewer exist."""
    if not context.edges:
        raise NoAvailableEdge(
            f"consumer {context.consumer} has no usable edge left"
        )
    order = sorted(
        range(len(context.edges)),
        key=lambda t: (context.distances[t], context.edges[t].producer),
    )
    return [context.edges[t] for t in order[:k]]


def greedy_select(context: SelectionContext) -> EdgeId:
    """Cheapest usable edge (ties go to the lowest producer index)."""
    return find_top_avail(context, 1)[0]


def randomized_select(context, config: PolicyConfig, rng) -> EdgeId:
    """Draw uniformly from the top-k candidate set until a draw lands within
    beta times the greedy choice; fall back to greedy after max_iterations
    fruitless draws. With beta = 1 any accepted draw matches the greedy
    distance exactly.
    """
    # The engine resolves the k default against num_producers; standalone
    # callers without an explicit k get it resolved against the usable set.
    k = config.k if config.k is not None else min(4, len(context.edges))
    top = find_top_avail(context, k)
    best = top[0]
    best_dist = context.distance_of(best)
    iterations = (
        config.max_iterations if config.max_iterations is not None else len(top)
    )
    for _ in range(iterations):
        pick = top[rng.randrange(len(top))]
        if context.distance_of(pick) / best_dist <= config.beta:
            return pick
    return best


def allocate_demand(state, consumer, amount, selector) -> list:
    """Place amount for consumer by repeatedly asking the selector for an
    edge and filling it up to the producer's spare capacity. Returns the
    applied (EdgeId, delta) list. Transactional: on InsufficientCapacity the
    state is restored to the pre-call snapshot.
    """
    if amount < 0:
        raise ValueError(f"cannot allocate negative amount {amount}")
    if amount == 0:
        return []
    snapshot = state.copy()
    deltas = []
    remaining = float(amount)
    scale_eps = _CAP_EPS * max(1.0, amount)
    while remaining > scale_eps:
        context = selection_context(state, consumer)
        try:
            edge = selector(context)
        except NoAvailableEdge:
            state.restore(snapshot)
            raise InsufficientCapacity(
                f"consumer {consumer} still needs {remaining} but no usable "
                "edge remains"
            ) from None
        take = min(remaining, state.remaining_capacity[edge.producer])
        state.add_weight(edge, take)
        deltas.append((edge, take))
        remaining -= take
    return deltas


def proportional_allocate(state, consumer, amount) -> list:
    """Spread amount over the consumer's usable edges proportionally to
    1/distance, water-filling past producer capacity caps: capped shares are
    pinned at the cap and the excess is redistributed over the uncapped
    edges by the same rule. Transactional like allocate_demand.
    """
    if amount < 0:
        raise ValueError(f"cannot allocate negative amount {amount}")
    if amount == 0:
        return []
    snapshot = state.copy()
    context = selection_context(state, consumer)
    if not context.edges:
        raise InsufficientCapacity(
            f"consumer {consumer} has no usable edge for amount {amount}"
        )
    open_edges = {
        edge: (dist, avail)
        for edge, dist, avail in zip(
            context.edges, context.distances, context.available
        )
    }
    fixed = {}
    remaining = float(amount)
    while True:
        if not open_edges:
            state.restore(snapshot)
            raise InsufficientCapacity(
                f"consumer {consumer} cannot place {remaining} of {amount}: "
                "every usable producer is capped"
            )
        denom = sum(1.0 / dist for dist, _ in open_edges.values())
        capped = []
        for edge, (dist, avail) in open_edges.items():
            share = remaining * (1.0 / dist) / denom
            if share > avail * (1.0 + 1e-12):
                capped.append(edge)
        if not capped:
            break
        for edge in capped:
            _, avail = open_edges.pop(edge)
            fixed[edge] = avail
            remaining -= avail
        if remaining <= _CAP_EPS * max(1.0, amount):
            remaining = max(remaining, 0.0)
            break

    deltas = []
    for edge, share in fixed.items():
        deltas.append((edge, share))
    if remaining > 0.0 and open_edges:
        edges = list(open_edges)
        denom = sum(1.0 / open_edges[e][0] for e in edges)
        placed = 0.0
        for t, edge in enumerate(edges):
            if t == len(edges) - 1:
                share = remaining - placed  # exact mass conservation
            else:
                share = remaining * (1.0 / open_edges[edge][0]) / denom
            placed += share
            deltas.append((edge, share))
    deltas.sort(key=lambda pair: pair[0].producer)
    for edge, share in deltas:
        state.add_weight(edge, share)
    return deltas


def proportional_scale_bound(instance: ProblemInstance) -> float:
    """Largest scale factor at which weights proportional to 1/distance fit
    every producer: min over producers of capacity / sum_i (1/distance)."""
    best = float("inf")
    for j in range(instance.num_producers):
        inv = sum(
            1.0 / instance.distance(i, j) for i in range(instance.num_consumers)
        )
        best = min(best, instance.capacities[j] / inv)
    return best
