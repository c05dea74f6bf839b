"""Cross-seed sweeps over consumer counts and policies.

Each (consumer count, seed) cell generates one workload from a shared
template and runs every requested policy on it. Aggregation is keyed and
sorted on (consumer count, policy name), so results are deterministic no
matter how the cells were scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from statistics import fmean, pstdev

from .errors import InvalidSpec
from .offline import opt_prefix_series
from .simulate import run
from .workload import GenSpec, generate

OPT_POLICY = "opt"


@dataclass(frozen=True)
class RunMatrixSpec:
    """A sweep: consumer counts x policies x seeds over one GenSpec template.

    policies maps a row label to a PolicyConfig, or to the OPT_POLICY
    sentinel for the offline-optimum baseline. The template's consumer count
    and seed are overridden per cell.
    """

    consumer_counts: tuple
    policies: tuple  # of (name, PolicyConfig | OPT_POLICY)
    seeds: tuple
    template: GenSpec

    def __post_init__(self):
        if not self.consumer_counts or not self.policies or not self.seeds:
            raise InvalidSpec("sweep lists must be non-empty")


@dataclass(frozen=True)
class BenchRow:
    consumers: int
    policy: str
    mean_final_cost: float
    stddev_final_cost: float
    mean_max_ratio: float
    seeds: int


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)
    warnings: list = field(default_factory=list)  # (consumers, policy, seed, kind)


def _run_cell(template, consumers, seed, name, config):
    """One (cell, seed, policy) run; returns (final_cost, max_ratio) with
    NaNs when the run was truncated, plus the error kind if any."""
    spec = replace(template, num_consumers=consumers, seed=seed)
    instance, trace = generate(spec)
    if config == OPT_POLICY:
        series = opt_prefix_series(instance, trace)
        if series.infeasible_step is not None or not series.entries:
            return math.nan, math.nan, "Infeasible"
        return series.entries[-1][1], 1.0, None
    result = run(instance, trace, replace(config, seed=seed))
    if result.error_kind:
        return math.nan, math.nan, result.error_kind
    return result.final_cost, result.max_ratio, None


def run_matrix(spec: RunMatrixSpec, jobs: int = 1) -> BenchReport:
    """Run the whole sweep. Individual run failures become NaN aggregates
    plus a warning entry; the sweep itself never aborts."""
    tasks = [
        (consumers, seed, name, config)
        for consumers in spec.consumer_counts
        for name, config in spec.policies
        for seed in spec.seeds
    ]

    def work(task):
        consumers, seed, name, config = task
        return _run_cell(spec.template, consumers, seed, name, config)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(work, tasks))
    else:
        outcomes = [work(t) for t in tasks]

    cells = {}
    report = BenchReport()
    for (consumers, seed, name, _), (cost, ratio, err) in zip(tasks, outcomes):
        cells.setdefault((consumers, name), []).append((cost, ratio))
        if err is not None:
            report.warnings.append((consumers, name, seed, err))

    for (consumers, name) in sorted(cells, key=lambda k: (k[0], k[1])):
        samples = cells[(consumers, name)]
        costs = [c for c, _ in samples]
        ratios = [r for _, r in samples]
        # A truncated run poisons its whole cell: aggregates become NaN
        # rather than silently averaging over a subset of seeds.
        poisoned = any(math.isnan(c) for c in costs)
        report.rows.append(
            BenchRow(
                consumers=consumers,
                policy=name,
                mean_final_cost=math.nan if poisoned else fmean(costs),
                stddev_final_cost=math.nan if poisoned else pstdev(costs),
                mean_max_ratio=math.nan if poisoned else fmean(ratios),
                seeds=len(samples),
            )
        )
    return report
