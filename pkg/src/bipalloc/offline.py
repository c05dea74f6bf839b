"""Exact offline optimum for the allocation problem, staged re-solves under
edge failures, and lp_solve-style model text export.

The problem is a pure transportation LP: minimize sum(d_ij * w_ij) subject
to per-consumer equality (row sums match demands on live edges) and
per-producer capacity (column sums bounded). It is solved exactly by
reduction to min-cost flow: source -> consumers (demand) -> live edges
(distance cost) -> producers (capacity) -> sink, using successive shortest
paths with node potentials. Pinned lower bounds are transformed away by
pre-routing the pinned mass and shrinking demands and capacities.

Producers are scanned in ascending index order everywhere, so the witness
matrix is deterministic (the objective is unique regardless).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from heapq import heappop, heappush

from .errors import Infeasible, TooLarge
from .model import EdgeId, ProblemInstance, ServiceTrace, total_cost

_FEAS_TOL = 1e-9


@dataclass
class OfflineSolution:
    """An optimal weight matrix and its objective value."""

    weights: list
    objective: float
    status: str = "optimal"


def _full_alive(instance):
    return [[True] * instance.num_producers for _ in range(instance.num_consumers)]


def _check_inputs(instance, demands, alive, pins):
    n, m = instance.num_consumers, instance.num_producers
    if len(demands) != n:
        raise ValueError(f"expected {n} demands, got {len(demands)}")
    for i, r in enumerate(demands):
        if r < 0 or not math.isfinite(r):
            raise ValueError(f"demand of consumer {i} is {r}")
    pinned = [[0.0] * m for _ in range(n)]
    for edge, w in pins or ():
        if w < 0:
            raise ValueError(f"pinned weight on {edge} is negative ({w})")
        if not (0 <= edge.consumer < n and 0 <= edge.producer < m):
            raise ValueError(f"pin names unknown edge {edge}")
        if not alive[edge.consumer][edge.producer]:
            if w > _FEAS_TOL:
                raise Infeasible(f"pin of {w} on dead edge {edge}")
            continue
        # Duplicate pins on one edge keep the tightest lower bound.
        pinned[edge.consumer][edge.producer] = max(
            pinned[edge.consumer][edge.producer], float(w)
        )
    return pinned


def solve(instance, demands, alive=None, pins=None) -> OfflineSolution:
    """Minimum-cost weights meeting every demand exactly on live edges while
    respecting producer capacities and pinned lower bounds.

    Raises Infeasible when the demand cannot be routed (no augmenting path
    remains while demand is outstanding, the flow-side equivalent of a
    max-flow feasibility check).
    """
    n, m = instance.num_consumers, instance.num_producers
    if alive is None:
        alive = _full_alive(instance)
    demands = [float(r) for r in demands]
    pinned = _check_inputs(instance, demands, alive, pins)

    residual_demand = []
    for i in range(n):
        left = demands[i] - sum(pinned[i])
        if left < -_FEAS_TOL * max(1.0, demands[i]):
            raise Infeasible(
                f"pins on consumer {i} exceed its demand ({sum(pinned[i])} > {demands[i]})"
            )
        residual_demand.append(max(left, 0.0))
    residual_cap = []
    for j in range(m):
        pinned_col = sum(pinned[i][j] for i in range(n))
        left = instance.capacities[j] - pinned_col
        if left < -_FEAS_TOL * max(1.0, instance.capacities[j]):
            raise Infeasible(
                f"pins on producer {j} exceed its capacity "
                f"({pinned_col} > {instance.capacities[j]})"
            )
        residual_cap.append(max(left, 0.0))

    flows = _min_cost_transport(instance, residual_demand, residual_cap, alive)

    weights = [
        [pinned[i][j] + flows[i][j] for j in range(m)] for i in range(n)
    ]
    return OfflineSolution(weights, total_cost(instance, weights))


def _min_cost_transport(instance, demand, cap, alive):
    """Successive shortest paths with potentials on the 4-layer flow network.

    Nodes: 0 = source, 1..n = consumers, n+1..n+m = producers, n+m+1 = sink.
    """
    n, m = instance.num_consumers, instance.num_producers
    total = sum(demand)
    scale = max(1.0, total)
    eps = 1e-12 * scale

    num_nodes = n + m + 2
    source, sink = 0, n + m + 1
    to, cap_arr, cost_arr, head = [], [], [], [[] for _ in range(num_nodes)]

    def add_arc(u, v, c, w):
        head[u].append(len(to))
        to.append(v)
        cap_arr.append(c)
        cost_arr.append(w)
        head[v].append(len(to))
        to.append(u)
        cap_arr.append(0.0)
        cost_arr.append(-w)

    edge_arc = {}
    for i in range(n):
        add_arc(source, 1 + i, demand[i], 0.0)
    for i in range(n):
        for j in range(m):
            if alive[i][j]:
                edge_arc[(i, j)] = len(to)
                add_arc(1 + i, 1 + n + j, demand[i], instance.distance(i, j))
    for j in range(m):
        add_arc(1 + n + j, sink, cap[j], 0.0)

    pot = [0.0] * num_nodes
    delivered = 0.0
    inf = float("inf")
    while total - delivered > eps:
        dist = [inf] * num_nodes
        prev = [-1] * num_nodes
        done = [False] * num_nodes
        dist[source] = 0.0
        heap = [(0.0, source)]
        while heap:
            d, u = heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for ai in head[u]:
                if cap_arr[ai] <= eps:
                    continue
                v = to[ai]
                if done[v]:
                    continue
                # Reduced cost; clamp float dust so Dijkstra stays valid.
                w = cost_arr[ai] + pot[u] - pot[v]
                if w < 0.0:
                    w = 0.0
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    prev[v] = ai
                    heappush(heap, (nd, v))
        if not done[sink]:
            raise Infeasible(
                f"only {delivered} of {total} total demand is routable over "
                "live edges within producer capacities"
            )
        for v in range(num_nodes):
            if done[v]:
                pot[v] += dist[v]
        push = total - delivered
        v = sink
        while v != source:
            ai = prev[v]
            push = min(push, cap_arr[ai])
            v = to[ai ^ 1]
        v = sink
        while v != source:
            ai = prev[v]
            cap_arr[ai] -= push
            cap_arr[ai ^ 1] += push
            v = to[ai ^ 1]
        delivered += push

    flows = [[0.0] * m for _ in range(n)]
    for (i, j), ai in edge_arc.items():
        flows[i][j] = cap_arr[ai ^ 1]  # reverse-arc capacity equals pushed flow
    return flows


_BRUTE_STATE_LIMIT = 10_000_000


def brute_force_oracle(instance, demands, alive=None) -> OfflineSolution:
    """Independent exact optimum by exhaustive enumeration of integer
    allocations, valid because a transportation program with integer data
    has an integer optimal vertex. Requires integer demands and capacities;
    raises TooLarge when the enumeration bound exceeds 10^7 states.
    """
    n, m = instance.num_consumers, instance.num_producers
    if alive is None:
        alive = _full_alive(instance)
    rs = []
    for i, r in enumerate(demands):
        if float(r) != int(r):
            raise ValueError(f"oracle needs integer demands, got {r}")
        rs.append(int(r))
    caps = []
    for c in instance.capacities:
        if float(c) != int(c):
            raise ValueError(f"oracle needs integer capacities, got {c}")
        caps.append(int(c))

    states = 1
    for i in range(n):
        cols = sum(1 for j in range(m) if alive[i][j])
        states *= math.comb(rs[i] + max(cols - 1, 0), max(cols - 1, 0)) if cols else 1
        if states > _BRUTE_STATE_LIMIT:
            raise TooLarge(
                f"enumeration would exceed {_BRUTE_STATE_LIMIT} states"
            )

    live_cols = [[j for j in range(m) if alive[i][j]] for i in range(n)]
    memo = {}

    def compositions(amount, limits):
        if len(limits) == 1:
            if amount <= limits[0]:
                yield (amount,)
            return
        for first in range(min(amount, limits[0]) + 1):
            for rest in compositions(amount - first, limits[1:]):
                yield (first,) + rest

    def best(i, caps_left):
        if i == n:
            return 0.0, ()
        key = (i, caps_left)
        if key in memo:
            return memo[key]
        cols = live_cols[i]
        result = (math.inf, None)
        if not cols:
            if rs[i] == 0:
                result = best(i + 1, caps_left)
        else:
            limits = tuple(caps_left[j] for j in cols)
            for comp in compositions(rs[i], limits):
                row_cost = sum(
                    comp[t] * instance.distance(i, cols[t])
                    for t in range(len(cols))
                )
                nxt = list(caps_left)
                for t, j in enumerate(cols):
                    nxt[j] -= comp[t]
                tail_cost, tail = best(i + 1, tuple(nxt))
                cost = row_cost + tail_cost
                if cost < result[0]:
                    result = (cost, (comp,) + (tail or ()))
        memo[key] = result
        return result

    objective, chosen = best(0, tuple(caps))
    if not math.isfinite(objective):
        raise Infeasible("no integer allocation satisfies the demands")
    weights = [[0.0] * m for _ in range(n)]
    for i in range(n):
        for t, j in enumerate(live_cols[i]):
            weights[i][j] = float(chosen[i][t])
    return OfflineSolution(weights, float(objective))


def format_number(x: float) -> str:
    """Bare integer when integral, otherwise the shortest round-trip decimal."""
    xf = float(x)
    if xf.is_integer() and abs(xf) < 1e15:
        return str(int(xf))
    return repr(xf)


def export_lp(instance, demands, alive=None, pins=None) -> str:
    """Model text in the lp_solve dialect: a ``min:`` objective over live
    edges in flat variable order, one ``<=`` line per producer, one ``=``
    line per consumer, and one ``>=`` line per strictly positive pin. Dead
    edges are omitted from every line.
    """
    n, m = instance.num_consumers, instance.num_producers
    if alive is None:
        alive = _full_alive(instance)
    pinned = _check_inputs(instance, [float(r) for r in demands], alive, pins)

    def var(i, j):
        return f"x{EdgeId(i, j).flat(m)}"

    lines = []
    terms = [
        f"{format_number(instance.distance(i, j))}{var(i, j)}"
        for i in range(n)
        for j in range(m)
        if alive[i][j]
    ]
    lines.append("min: " + "+".join(terms) + ";")
    for j in range(m):
        vs = [var(i, j) for i in range(n) if alive[i][j]]
        if vs:
            lines.append(
                "+".join(vs) + f"<={format_number(instance.capacities[j])};"
            )
    for i in range(n):
        vs = [var(i, j) for j in range(m) if alive[i][j]]
        if vs:
            lines.append("+".join(vs) + f"={format_number(demands[i])};")
    for i in range(n):
        for j in range(m):
            if pinned[i][j] > 0.0:
                lines.append(f"{var(i, j)}>={format_number(pinned[i][j])};")
    return "\n".join(lines) + "\n"


class OfflineTracker:
    """Incremental offline optimum for the demands seen so far under the
    current dead-edge set.

    The tracked objective is an exact lower bound for any policy run under
    the same demand prefix and failure history: the policy's live allocation
    is itself feasible for this program, so per-step cost ratios against it
    are always >= 1. (The staged re-solve that additionally pins earlier
    optimal layouts lives in solve_staged; its objective is not a universal
    lower bound, because a failure can strand pinned mass on edges a policy
    happened to avoid.)
    """

    def __init__(self, instance: ProblemInstance):
        self._instance = instance
        self._demands = [0.0] * instance.num_consumers
        self._alive = _full_alive(instance)
        self._cache_key = None
        self._cache_sol = None

    def add_demand(self, consumer: int, amount: float) -> None:
        self._demands[consumer] += amount

    def _key(self):
        return (
            tuple(self._demands),
            tuple(tuple(row) for row in self._alive),
        )

    def solution(self) -> OfflineSolution:
        key = self._key()
        if key != self._cache_key:
            self._cache_sol = solve(self._instance, self._demands, self._alive)
            self._cache_key = key
        return self._cache_sol

    def objective(self) -> float:
        return self.solution().objective

    def fail(self, edge: EdgeId) -> bool:
        """Kill edge; returns False when it was already dead (a no-op)."""
        i, j = edge.consumer, edge.producer
        if not self._alive[i][j]:
            return False
        self._alive[i][j] = False
        return True


@dataclass
class OptSeries:
    """Per-step offline optima; ``infeasible_step`` marks where (if anywhere)
    the optimum became unattainable and the series was truncated."""

    entries: list = field(default_factory=list)  # list of (step, objective)
    infeasible_step: int | None = None


def _failures_by_step(trace: ServiceTrace):
    grouped = {}
    for ev in trace.failures:
        grouped.setdefault(ev.after_demand, []).append(ev)
    return grouped


def opt_prefix_series(instance, trace) -> OptSeries:
    """Offline optimum after each demand prefix, with failures applied in
    trace order between steps. This is the denominator series for empirical
    competitive ratios. After the failures of a step are applied, the
    current prefix is re-checked so infeasibility is reported at the step
    whose failures caused it.
    """
    trace.validate_for(instance)
    tracker = OfflineTracker(instance)
    grouped = _failures_by_step(trace)
    series = OptSeries()
    for step, (consumer, amount) in enumerate(trace.demands, 1):
        tracker.add_demand(consumer, amount)
        try:
            series.entries.append((step, tracker.objective()))
        except Infeasible:
            series.infeasible_step = step
            return series
        if grouped.get(step):
            for ev in grouped[step]:
                tracker.fail(ev.edge)
            try:
                tracker.objective()
            except Infeasible:
                series.infeasible_step = step
                return series
    return series


class _StagedState:
    """Replay state for the staged re-solve: at every failure instant the
    optimum current at that moment is recomputed, its weights on surviving
    edges become pinned lower bounds (already-placed mass is never
    disturbed), and the mass lost on the dead edge is re-routed by the
    boundary re-solve through the per-consumer equality constraints."""

    def __init__(self, instance):
        self._instance = instance
        self._demands = [0.0] * instance.num_consumers
        self._alive = _full_alive(instance)
        self._pins = []

    def add_demand(self, consumer, amount):
        self._demands[consumer] += amount

    def solution(self):
        return solve(self._instance, self._demands, self._alive, self._pins)

    def fail(self, edge):
        """Returns the boundary re-solve, or None for an already-dead edge."""
        i, j = edge.consumer, edge.producer
        if not self._alive[i][j]:
            return None
        pre = self.solution()
        pins = []
        for ei in range(self._instance.num_consumers):
            for ej in range(self._instance.num_producers):
                if (ei, ej) == (i, j) or not self._alive[ei][ej]:
                    continue
                if pre.weights[ei][ej] > 0.0:
                    pins.append((EdgeId(ei, ej), pre.weights[ei][ej]))
        self._alive[i][j] = False
        self._pins = pins
        return self.solution()


def solve_staged(instance, trace):
    """Offline optimum over the whole trace under the staged failure
    protocol, where each failure pins the weights the optimum had already
    placed (they are never disturbed) before re-routing the lost mass.

    Returns (final solution, stage solutions), one stage solution per
    failure boundary. Raises Infeasible if any boundary or the final solve
    cannot route its demands.
    """
    trace.validate_for(instance)
    state = _StagedState(instance)
    grouped = _failures_by_step(trace)
    stages = []
    for step, (consumer, amount) in enumerate(trace.demands, 1):
        state.add_demand(consumer, amount)
        for ev in grouped.get(step, ()):
            boundary = state.fail(ev.edge)
            if boundary is not None:
                stages.append(boundary)
    return state.solution(), stages
