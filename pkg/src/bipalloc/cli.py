"""Command-line harness: generate workloads, run policies against the
offline optimum, and sweep benchmark matrices.

Exit codes are a stable contract for scripting: 0 success, 1 usage or parse
errors, 2 infeasible or out-of-capacity runs (which still emit the partial
CSV plus an ``#error`` trailer).
"""

from __future__ import annotations

import argparse
import sys

from .bench import OPT_POLICY, BenchReport, RunMatrixSpec, run_matrix
from .errors import BipallocError
from .offline import export_lp, format_number, opt_prefix_series
from .policies import PolicyConfig
from .simulate import run
from .workload import GenSpec, generate, parse_instance, write_instance

ALGO_NAMES = ("greedy", "randomized", "derandomized", "proportional", "opt")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _fmt_ratio(x) -> str:
    return repr(float(x))


def _add_gen_args(parser):
    parser.add_argument("--consumers", type=int, required=True)
    parser.add_argument("--producers", type=int, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument(
        "--distances", type=int, nargs=2, default=(1, 100), metavar=("LO", "HI")
    )
    parser.add_argument(
        "--capacities", type=int, nargs=2, default=(10, 100), metavar=("LO", "HI")
    )
    parser.add_argument(
        "--demands", type=int, nargs=2, default=(1, 50), metavar=("LO", "HI")
    )
    parser.add_argument(
        "--order",
        choices=("uniform", "ascending", "hash_stream"),
        default="uniform",
    )
    parser.add_argument("--failures", type=int, default=0)


def _gen_spec_from_args(args, consumers=None, seed=None) -> GenSpec:
    return GenSpec(
        num_consumers=consumers if consumers is not None else args.consumers,
        num_producers=args.producers,
        distance_range=tuple(args.distances),
        capacity_range=tuple(args.capacities),
        demand_range=tuple(args.demands),
        demand_order=args.order,
        failure_count=args.failures,
        seed=seed if seed is not None else args.seed,
    )


def build_parser() -> _Parser:
    parser = _Parser(prog="bipalloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a workload instance file")
    _add_gen_args(gen)
    gen.add_argument("--out", help="write the instance here instead of stdout")

    runp = sub.add_parser("run", help="run one policy over an instance file")
    runp.add_argument("instance", help="path to an instance file")
    runp.add_argument("--algo", choices=ALGO_NAMES, required=True)
    runp.add_argument("--beta", type=float, default=1.0)
    runp.add_argument("--k", type=int, default=None)
    runp.add_argument("--iters", type=int, default=None)
    runp.add_argument("--seed", type=int, default=0)
    runp.add_argument("--runs", type=int, default=1)
    runp.add_argument(
        "--emit-lp",
        metavar="PATH",
        help="also write the offline model text for the full demand set",
    )
    runp.add_argument(
        "--plot",
        metavar="PATH",
        help="also render the per-step cost figure to this file",
    )
    runp.add_argument("--out", help="write the CSV here instead of stdout")

    benchp = sub.add_parser("bench", help="sweep consumer counts x policies x seeds")
    benchp.add_argument(
        "--consumers",
        required=True,
        help="comma list and/or LO-HI ranges, e.g. 2,4,8 or 2-16",
    )
    benchp.add_argument("--producers", type=int, required=True)
    benchp.add_argument(
        "--seeds", required=True, help="comma list and/or LO-HI ranges"
    )
    benchp.add_argument(
        "--policies",
        default="greedy,opt",
        help=f"comma list from {', '.join(ALGO_NAMES)}",
    )
    benchp.add_argument("--beta", type=float, default=1.0)
    benchp.add_argument("--k", type=int, default=None)
    benchp.add_argument("--iters", type=int, default=None)
    benchp.add_argument("--runs", type=int, default=1)
    benchp.add_argument(
        "--distances", type=int, nargs=2, default=(1, 100), metavar=("LO", "HI")
    )
    benchp.add_argument(
        "--capacities", type=int, nargs=2, default=(10, 100), metavar=("LO", "HI")
    )
    benchp.add_argument(
        "--demands", type=int, nargs=2, default=(1, 50), metavar=("LO", "HI")
    )
    benchp.add_argument(
        "--order",
        choices=("uniform", "ascending", "hash_stream"),
        default="uniform",
    )
    benchp.add_argument("--failures", type=int, default=0)
    benchp.add_argument("--jobs", type=int, default=1)
    benchp.add_argument("--out", help="write the CSV here instead of stdout")
    benchp.add_argument(
        "--plot-dir",
        metavar="DIR",
        help="also render trend figures into this directory",
    )
    return parser


def _parse_int_list(text: str) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if not part.startswith("-") and "-" in part:
            lo_s, hi_s = part.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise _UsageError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise _UsageError(f"no values in {text!r}")
    return out


def _policy_for(name: str, args) -> object:
    if name == "opt":
        return OPT_POLICY
    return PolicyConfig(
        kind=name,
        beta=args.beta,
        k=args.k,
        max_iterations=args.iters,
        seed=args.seed if hasattr(args, "seed") else 0,
        runs=args.runs,
    )


def _emit(text: str, out_path, stdout) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        stdout.write(text)


RUN_CSV_HEADER = "step,consumer,demand,synthetic,policy_cost,opt_cost,ratio"


def _run_csv(records, error=None, final=None) -> str:
    lines = [RUN_CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.step},{r.consumer},{format_number(r.demand)},"
            f"{1 if r.synthetic else 0},{format_number(r.policy_cost)},"
            f"{format_number(r.opt_cost)},{_fmt_ratio(r.ratio)}"
        )
    if error is not None:
        kind, step = error
        lines.append(f"#error,{kind},{step}")
    else:
        policy_cost, opt_cost, max_ratio = final
        lines.append(
            f"#final,{format_number(policy_cost)},{format_number(opt_cost)},"
            f"{_fmt_ratio(max_ratio)}"
        )
    return "\n".join(lines) + "\n"


def cmd_gen(args, stdout) -> int:
    instance, trace = generate(_gen_spec_from_args(args))
    _emit(write_instance(instance, trace), args.out, stdout)
    return EXIT_OK


def cmd_run(args, stdout) -> int:
    with open(args.instance, "r", encoding="utf-8") as handle:
        instance, trace = parse_instance(handle.read())

    if args.emit_lp:
        demands = [0.0] * instance.num_consumers
        for consumer, amount in trace.demands:
            demands[consumer] += amount
        with open(args.emit_lp, "w", encoding="utf-8") as handle:
            handle.write(export_lp(instance, demands))

    if args.algo == "opt":
        series = opt_prefix_series(instance, trace)
        records = [
            _OptRow(step, trace.demands[step - 1][0], trace.demands[step - 1][1], value)
            for step, value in series.entries
        ]
        if series.infeasible_step is not None:
            text = _run_csv(records, error=("Infeasible", series.infeasible_step))
            _emit(text, args.out, stdout)
            return EXIT_INFEASIBLE
        final_value = series.entries[-1][1] if series.entries else 0.0
        text = _run_csv(records, final=(final_value, final_value, 1.0))
        _emit(text, args.out, stdout)
        if args.plot and records:
            from .report import render_run_figure

            render_run_figure(records, args.plot, title="offline optimum per step")
        return EXIT_OK

    config = _policy_for(args.algo, args)
    result = run(instance, trace, config)
    if result.error_kind:
        text = _run_csv(result.records, error=(result.error_kind, result.error_step))
        _emit(text, args.out, stdout)
        return EXIT_INFEASIBLE
    text = _run_csv(
        result.records,
        final=(result.final_cost, result.opt_final, result.max_ratio),
    )
    _emit(text, args.out, stdout)
    if args.plot and result.records:
        from .report import render_run_figure

        render_run_figure(result.records, args.plot, title=f"{args.algo} vs optimum")
    return EXIT_OK


class _OptRow:
    """Adapter so offline-series entries render like step records."""

    def __init__(self, step, consumer, demand, value):
        self.step = step
        self.consumer = consumer
        self.demand = demand
        self.synthetic = False
        self.policy_cost = value
        self.opt_cost = value
        self.ratio = 1.0


BENCH_CSV_HEADER = (
    "consumers,policy,mean_final_cost,stddev_final_cost,mean_max_ratio,seeds"
)


def _bench_csv(report: BenchReport) -> str:
    lines = [BENCH_CSV_HEADER]
    for row in report.rows:
        lines.append(
            f"{row.consumers},{row.policy},{format_number(row.mean_final_cost)},"
            f"{format_number(row.stddev_final_cost)},"
            f"{_fmt_ratio(row.mean_max_ratio)},{row.seeds}"
        )
    for consumers, policy, seed, kind in report.warnings:
        lines.append(f"#warn,{consumers},{policy},{seed},{kind}")
    return "\n".join(lines) + "\n"


def cmd_bench(args, stdout) -> int:
    policy_names = [p.strip() for p in args.policies.split(",") if p.strip()]
    for name in policy_names:
        if name not in ALGO_NAMES:
            raise _UsageError(f"unknown policy {name!r}")
    template = _gen_spec_from_args(args, consumers=1, seed=0)
    matrix = RunMatrixSpec(
        consumer_counts=tuple(_parse_int_list(args.consumers)),
        policies=tuple((name, _policy_for(name, args)) for name in policy_names),
        seeds=tuple(_parse_int_list(args.seeds)),
        template=template,
    )
    report = run_matrix(matrix, jobs=args.jobs)
    _emit(_bench_csv(report), args.out, stdout)
    if args.plot_dir:
        from .report import render_bench_figures

        render_bench_figures(report.rows, args.plot_dir)
    return EXIT_OK


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen":
            return cmd_gen(args, stdout)
        if args.command == "run":
            return cmd_run(args, stdout)
        return cmd_bench(args, stdout)
    except _UsageError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (OSError, BipallocError, ValueError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
