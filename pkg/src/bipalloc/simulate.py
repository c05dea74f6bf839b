"""Drives a policy over a service trace, replays the edge-failure protocol
with internal re-demands, and records per-step costs against the offline
optimum computed under the identical failure history.

One run is strictly sequential (online semantics). A run never raises for
infeasibility: it truncates, keeping every completed record, and carries an
explicit error marker instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import EmptySeries, Infeasible, InsufficientCapacity
from .model import (
    AllocationState,
    EdgeId,
    ProblemInstance,
    ServiceTrace,
    StepRecord,
    cost_ratio,
)
from .offline import OfflineTracker, _failures_by_step
from .policies import (
    PolicyConfig,
    allocate_demand,
    greedy_select,
    proportional_allocate,
    randomized_select,
)
from .rng import SplitMix64


@dataclass
class SimulationResult:
    """Everything one policy run produced.

    records includes synthetic entries for failure-triggered re-demands.
    error_kind/error_step are set when the run was truncated (the policy ran
    out of capacity, or the offline optimum became infeasible); records then
    stop at the last completed step. states holds a post-record snapshot per
    record when the run was started with capture_states=True.
    """

    records: list
    final_state: AllocationState
    final_cost: float
    opt_final: float
    max_ratio: float
    failures_processed: int
    error_kind: str | None = None
    error_step: int | None = None
    states: list | None = None


def apply_failure(state: AllocationState, edge: EdgeId) -> float:
    """Kill edge, zero its weight, and hand the producer its capacity back.

    Returns the weight lost, which the caller re-allocates for the same
    consumer as an internal demand. Failing a dead edge is a no-op worth 0.
    """
    i, j = edge.consumer, edge.producer
    if not state.alive[i][j]:
        return 0.0
    lost = state.weights[i][j]
    state.alive[i][j] = False
    state.weights[i][j] = 0.0
    state.remaining_capacity[j] += lost
    state.satisfied[i] -= lost
    state.cumulative_cost -= lost * state.instance.distance(i, j)
    return lost


def _make_allocator(instance: ProblemInstance, config: PolicyConfig):
    m = instance.num_producers
    if config.kind == "proportional":
        return lambda state, consumer, amount: proportional_allocate(
            state, consumer, amount
        )
    if config.kind == "greedy":
        selector = greedy_select
    elif config.kind == "randomized":
        resolved = replace(
            config,
            k=config.effective_k(m),
            max_iterations=config.effective_iterations(m),
        )
        rng = SplitMix64(config.seed)
        selector = lambda ctx: randomized_select(ctx, resolved, rng)
    else:
        raise ValueError(f"no allocator for policy kind {config.kind!r}")
    return lambda state, consumer, amount: allocate_demand(
        state, consumer, amount, selector
    )


def run(
    instance: ProblemInstance,
    trace: ServiceTrace,
    config: PolicyConfig,
    capture_states: bool = False,
) -> SimulationResult:
    """Process the trace demands in order; after demand t fire every failure
    keyed to t, re-allocating lost weight through the same policy. A record
    is appended after each demand and each re-demand, with the offline
    optimum replayed under the same failure history as the denominator.
    """
    if config.kind == "derandomized":
        return derandomized_run(instance, trace, config, capture_states).best
    trace.validate_for(instance)
    allocator = _make_allocator(instance, config)
    state = AllocationState.initial(instance)
    tracker = OfflineTracker(instance)
    grouped = _failures_by_step(trace)
    records = []
    states = [] if capture_states else None
    failures_processed = 0
    error_kind = error_step = None

    def record(step, consumer, amount, synthetic, opt_cost):
        rec = StepRecord(
            step=step,
            consumer=consumer,
            demand=amount,
            synthetic=synthetic,
            policy_cost=state.cumulative_cost,
            opt_cost=opt_cost,
            ratio=cost_ratio(state.cumulative_cost, opt_cost),
        )
        records.append(rec)
        if states is not None:
            states.append(state.copy())

    for step, (consumer, amount) in enumerate(trace.demands, 1):
        snapshot = state.copy()
        try:
            allocator(state, consumer, amount)
            tracker.add_demand(consumer, amount)
            opt_cost = tracker.objective()
        except InsufficientCapacity:
            error_kind, error_step = "InsufficientCapacity", step
            break
        except Infeasible:
            state.restore(snapshot)
            error_kind, error_step = "Infeasible", step
            break
        record(step, consumer, amount, False, opt_cost)

        failed = False
        for event in grouped.get(step, ()):
            snapshot = state.copy()
            lost = apply_failure(state, event.edge)
            tracker.fail(event.edge)
            failures_processed += 1
            if lost <= 0.0:
                continue  # nothing to re-route, no synthetic record
            try:
                allocator(state, event.edge.consumer, lost)
                boundary_opt = tracker.objective()
            except InsufficientCapacity:
                state.restore(snapshot)
                error_kind, error_step = "InsufficientCapacity", step
                failed = True
                break
            except Infeasible:
                state.restore(snapshot)
                error_kind, error_step = "Infeasible", step
                failed = True
                break
            record(step, event.edge.consumer, lost, True, boundary_opt)
        if failed:
            break

    final_cost = records[-1].policy_cost if records else 0.0
    opt_final = records[-1].opt_cost if records else 0.0
    max_ratio = max((r.ratio for r in records), default=1.0)
    return SimulationResult(
        records=records,
        final_state=state,
        final_cost=final_cost,
        opt_final=opt_final,
        max_ratio=max_ratio,
        failures_processed=failures_processed,
        error_kind=error_kind,
        error_step=error_step,
        states=states,
    )


@dataclass
class DerandomizedResult:
    """Best of several independently seeded randomized runs."""

    best: SimulationResult
    best_run_index: int  # 1-based
    per_run_costs: list  # final cost per run, NaN where a run was truncated


def derandomized_run(
    instance: ProblemInstance,
    trace: ServiceTrace,
    config: PolicyConfig,
    capture_states: bool = False,
) -> DerandomizedResult:
    """Execute the randomized policy config.runs times, run r seeded with
    seed + r, and keep the cheapest complete run (lowest index wins ties).
    Truncated runs are excluded unless every run truncated, in which case
    the first run's result carries the marker through.
    """
    results = []
    costs = []
    for r in range(1, config.runs + 1):
        sub = replace(config, kind="randomized", seed=config.seed + r, runs=1)
        result = run(instance, trace, sub, capture_states)
        results.append(result)
        costs.append(math.nan if result.error_kind else result.final_cost)
    best_idx = None
    for idx, (result, cost) in enumerate(zip(results, costs)):
        if result.error_kind:
            continue
        if best_idx is None or cost < costs[best_idx]:
            best_idx = idx
    if best_idx is None:
        best_idx = 0
    return DerandomizedResult(
        best=results[best_idx],
        best_run_index=best_idx + 1,
        per_run_costs=costs,
    )


@dataclass
class CompetitiveSummary:
    """Per-step ratios plus the affine fit policy ~ alpha*opt + startup."""

    ratios: list
    empirical_alpha: float
    fit_alpha: float
    fit_startup_cost: float


def competitive_series(records) -> CompetitiveSummary:
    """Ratios per record, their maximum as the empirical competitive ratio,
    and a least-squares affine fit of policy cost against optimum cost (the
    fit is diagnostic only)."""
    if not records:
        raise EmptySeries("no records to summarize")
    ratios = [r.ratio for r in records]
    xs = [r.opt_cost for r in records]
    ys = [r.policy_cost for r in records]
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    var_x = sum((x - mean_x) ** 2 for x in xs)
    if var_x <= 1e-12 * max(1.0, mean_x * mean_x):
        alpha = 0.0
    else:
        alpha = sum(
            (x - mean_x) * (y - mean_y) for x, y in zip(xs, ys)
        ) / var_x
    startup = mean_y - alpha * mean_x
    return CompetitiveSummary(
        ratios=ratios,
        empirical_alpha=max(ratios),
        fit_alpha=alpha,
        fit_startup_cost=startup,
    )
