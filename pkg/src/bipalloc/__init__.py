"""Online and offline weight allocation on complete bipartite
consumer-producer graphs with edge failures: an exact transportation
solver, online policies, a failure-replay simulation engine, seeded
workload generation, and a benchmarking CLI.
"""

from .bench import BenchReport, BenchRow, OPT_POLICY, RunMatrixSpec, run_matrix
from .errors import (
    BipallocError,
    DimensionMismatch,
    EmptySeries,
    InconsistentCounts,
    Infeasible,
    InstanceSyntaxError,
    InsufficientCapacity,
    InvalidSpec,
    NegativeCapacity,
    NoAvailableEdge,
    NonPositiveDistance,
    TooLarge,
)
from .model import (
    AllocationState,
    EdgeId,
    FailureEvent,
    ProblemInstance,
    ServiceTrace,
    StepRecord,
    Violation,
    cost_ratio,
    total_cost,
    validate,
)
from .offline import (
    OfflineSolution,
    OfflineTracker,
    OptSeries,
    brute_force_oracle,
    export_lp,
    opt_prefix_series,
    solve,
    solve_staged,
)
from .policies import (
    PolicyConfig,
    SelectionContext,
    allocate_demand,
    find_top_avail,
    greedy_select,
    proportional_allocate,
    proportional_scale_bound,
    randomized_select,
    selection_context,
)
from .rng import SplitMix64
from .simulate import (
    CompetitiveSummary,
    DerandomizedResult,
    SimulationResult,
    apply_failure,
    competitive_series,
    derandomized_run,
    run,
)
from .workload import (
    GenSpec,
    HashParams,
    generate,
    pairwise_hash,
    parse_instance,
    write_instance,
)

__version__ = "0.1.0"
