import io
import os

import pytest

from bipalloc.cli import main

from conftest import WORKED_LP, WORKED_TEXT


def invoke(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def worked_file(tmp_path):
    path = tmp_path / "worked.txt"
    path.write_text(WORKED_TEXT)
    return str(path)


class TestGen:
    def test_output_parses_and_round_trips(self, tmp_path):
        out_path = tmp_path / "inst.txt"
        code, _, _ = invoke(
            ["gen", "--consumers", "2", "--producers", "2", "--seed", "7",
             "--out", str(out_path)]
        )
        assert code == 0
        code, csv, _ = invoke([
            "run", str(out_path), "--algo", "greedy"
        ])
        assert code == 0
        assert csv.startswith("step,consumer,demand,")

    def test_identical_flags_identical_bytes(self):
        args = ["gen", "--consumers", "3", "--producers", "2", "--seed", "5",
                "--failures", "2"]
        _, first, _ = invoke(args)
        _, second, _ = invoke(args)
        assert first == second

    def test_too_many_failures_rejected(self):
        code, out, err = invoke(
            ["gen", "--consumers", "2", "--producers", "2", "--failures", "5"]
        )
        assert code == 1
        assert out == ""
        assert "failure_count" in err


class TestRun:
    def test_worked_greedy_csv(self, worked_file):
        code, out, _ = invoke(["run", worked_file, "--algo", "greedy"])
        assert code == 0
        assert out == (
            "step,consumer,demand,synthetic,policy_cost,opt_cost,ratio\n"
            "1,0,97,0,1649,1649,1.0\n"
            "2,1,78,0,1805,1805,1.0\n"
            "#final,1805,1805,1.0\n"
        )

    def test_opt_matches_prefix_series(self, worked_file):
        code, out, _ = invoke(["run", worked_file, "--algo", "opt"])
        assert code == 0
        assert out == (
            "step,consumer,demand,synthetic,policy_cost,opt_cost,ratio\n"
            "1,0,97,0,1649,1649,1.0\n"
            "2,1,78,0,1805,1805,1.0\n"
            "#final,1805,1805,1.0\n"
        )

    def test_beta_one_randomized_matches_greedy(self, worked_file):
        _, greedy_out, _ = invoke(["run", worked_file, "--algo", "greedy"])
        for seed in ("0", "1", "99"):
            code, rand_out, _ = invoke(
                ["run", worked_file, "--algo", "randomized", "--beta", "1",
                 "--seed", seed]
            )
            assert code == 0
            greedy_costs = [
                line.split(",")[4]
                for line in greedy_out.splitlines()[1:]
                if not line.startswith("#")
            ]
            rand_costs = [
                line.split(",")[4]
                for line in rand_out.splitlines()[1:]
                if not line.startswith("#")
            ]
            assert rand_costs == greedy_costs

    def test_derandomized_runs(self, worked_file):
        code, out, _ = invoke(
            ["run", worked_file, "--algo", "derandomized", "--beta", "2",
             "--seed", "3", "--runs", "4"]
        )
        assert code == 0
        assert out.splitlines()[-1].startswith("#final,")

    def test_zero_demand_file(self, tmp_path):
        path = tmp_path / "zero.txt"
        path.write_text(
            "no of consumers: 1\nno of producers: 1\nedge distances\n5\n"
            "producer capacities\n10\nconsumer demands\n0\n"
            "Number of edge failures: 0\n"
        )
        code, out, _ = invoke(["run", str(path), "--algo", "greedy"])
        assert code == 0
        assert out.splitlines()[-1] == "#final,0,0,1.0"

    def test_emit_lp_golden(self, worked_file, tmp_path):
        lp_path = tmp_path / "model.lp"
        code, _, _ = invoke(
            ["run", worked_file, "--algo", "greedy", "--emit-lp", str(lp_path)]
        )
        assert code == 0
        assert lp_path.read_text() == WORKED_LP

    def test_infeasible_exit_code_and_trailer(self, tmp_path):
        path = tmp_path / "doomed.txt"
        path.write_text(
            "no of consumers: 1\nno of producers: 1\nedge distances\n5\n"
            "producer capacities\n10\nconsumer demands\n10\n"
            "Number of edge failures: 1\n1\n1\n"
        )
        code, out, _ = invoke(["run", str(path), "--algo", "opt"])
        assert code == 2
        assert out.splitlines()[-1] == "#error,Infeasible,1"
        code, out, _ = invoke(["run", str(path), "--algo", "greedy"])
        assert code == 2
        assert out.splitlines()[-1] == "#error,InsufficientCapacity,1"

    def test_parse_error_exit_code(self, tmp_path):
        path = tmp_path / "garbage.txt"
        path.write_text("this is not an instance\n")
        code, out, err = invoke(["run", str(path), "--algo", "greedy"])
        assert code == 1
        assert "error" in err

    def test_missing_file_exit_code(self):
        code, _, err = invoke(["run", "/nonexistent/nope.txt", "--algo", "greedy"])
        assert code == 1

    def test_usage_error_exit_code(self, worked_file):
        code, _, err = invoke(["run", worked_file, "--algo", "psychic"])
        assert code == 1

    def test_out_writes_file_instead_of_stdout(self, worked_file, tmp_path):
        csv_path = tmp_path / "run.csv"
        code, out, _ = invoke(
            ["run", worked_file, "--algo", "greedy", "--out", str(csv_path)]
        )
        assert code == 0
        assert out == ""
        _, stdout_text, _ = invoke(["run", worked_file, "--algo", "greedy"])
        assert csv_path.read_text() == stdout_text

    def test_plot_written(self, worked_file, tmp_path):
        figure = tmp_path / "steps.png"
        code, _, _ = invoke(
            ["run", worked_file, "--algo", "greedy", "--plot", str(figure)]
        )
        assert code == 0
        assert figure.stat().st_size > 0


class TestBench:
    def test_single_seed_zero_stddev(self):
        code, out, _ = invoke(
            ["bench", "--consumers", "3", "--producers", "2", "--seeds", "4",
             "--policies", "greedy"]
        )
        assert code == 0
        row = out.splitlines()[1].split(",")
        assert row[0] == "3" and row[1] == "greedy"
        assert row[3] == "0"
        assert row[5] == "1"

    def test_greedy_never_beats_optimum(self):
        code, out, _ = invoke(
            ["bench", "--consumers", "2,4", "--producers", "3",
             "--seeds", "1-6", "--policies", "greedy,opt"]
        )
        assert code == 0
        rows = [line.split(",") for line in out.splitlines()[1:]]
        by_cell = {(r[0], r[1]): float(r[2]) for r in rows}
        for consumers in ("2", "4"):
            assert by_cell[(consumers, "greedy")] >= by_cell[(consumers, "opt")] - 1e-9

    def test_rows_sorted_and_deterministic(self):
        args = ["bench", "--consumers", "4,2", "--producers", "2",
                "--seeds", "2,1", "--policies", "opt,greedy"]
        code, first, _ = invoke(args)
        assert code == 0
        _, second, _ = invoke(args)
        assert first == second
        keys = [tuple(line.split(",")[:2]) for line in first.splitlines()[1:]]
        assert keys == sorted(keys)

    def test_jobs_do_not_change_output(self):
        base = ["bench", "--consumers", "2,4,6", "--producers", "2",
                "--seeds", "1-4", "--policies", "greedy,randomized,opt",
                "--beta", "3"]
        _, sequential, _ = invoke(base + ["--jobs", "1"])
        _, threaded, _ = invoke(base + ["--jobs", "4"])
        assert sequential == threaded

    def test_failed_cells_warn_and_nan(self):
        # Every 1x1 workload with one failure kills its only edge mid-run.
        code, out, _ = invoke(
            ["bench", "--consumers", "1", "--producers", "1", "--seeds", "1,2",
             "--policies", "greedy", "--failures", "1"]
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[1].split(",")[2] == "nan"
        warns = [line for line in lines if line.startswith("#warn,")]
        assert len(warns) == 2

    def test_unknown_policy_rejected(self):
        code, _, err = invoke(
            ["bench", "--consumers", "2", "--producers", "2", "--seeds", "1",
             "--policies", "sorcery"]
        )
        assert code == 1

    def test_plot_dir_written(self, tmp_path):
        plot_dir = tmp_path / "figs"
        code, _, _ = invoke(
            ["bench", "--consumers", "2,4", "--producers", "2", "--seeds",
             "1-3", "--policies", "greedy,opt", "--plot-dir", str(plot_dir)]
        )
        assert code == 0
        written = sorted(os.listdir(plot_dir))
        assert written == [
            "mean_final_cost.png",
            "mean_max_ratio.png",
            "stddev_final_cost.png",
        ]
