import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from reopt.bitstring import ContractViolation, Genome
from reopt.graphs import random_connected_graph
from reopt.harness import (
    CellStats,
    ExperimentSpec,
    TrialRow,
    aggregate,
    build_instance,
    check_upper_bound,
    fit_scaling_exponent,
    format_summary,
    milestone_targets,
    read_results,
    run_experiment,
    tail_cap,
    upper_bound,
    write_results,
)
from reopt.oracles import OracleRefusal, ball_optimum
from reopt.perturbations import PerturbationKind, PerturbationSpec, ReoptInstance
from reopt.problems import MstProblem


def lo_spec(**kw):
    pert = kw.pop("perturbation", PerturbationSpec(PerturbationKind.TARGET_FLIP, delta=1))
    return ExperimentSpec("leadingones", pert, kw.pop("n_values", (20,)), **kw)


class TestBounds:
    def test_formula_examples(self):
        assert upper_bound(3, 5, 100) == pytest.approx(3600 * math.e) and int(upper_bound(3, 5, 100)) == 9785
        assert upper_bound(4, 1, 10) == pytest.approx(2 * math.e * 100)
        assert tail_cap(1, 1.0) == pytest.approx(0.7788, abs=1e-4)

    def test_all_runs_below_threshold(self):
        rows = [TrialRow(s, 50, 1, 1, "rea", "leadingones", 100, "TargetHit", {0: 1, 1: 100})
                for s in range(10)]
        report = check_upper_bound(aggregate(rows), 1, 1, 50, 1.0)
        assert report.passed and report.exceed_rate == 0 and report.mean == 100

    def test_unreached_milestone_fails(self):
        rows = [TrialRow(0, 50, 1, 1, "rea", "leadingones", 10, "BudgetExhausted", {1: None})]
        report = check_upper_bound(aggregate(rows), 1, 1, 50, 1.0)
        assert not report.mean_ok and report.exceed_rate == 1

    def test_untracked_milestone(self):
        rows = [TrialRow(0, 50, 1, 1, "rea", "leadingones", 10, "TargetHit", {0: 1})]
        with pytest.raises(ContractViolation):
            check_upper_bound(aggregate(rows), 1, 1, 50, 1.0)


class TestScalingFit:
    def test_square(self):
        slope, err = fit_scaling_exponent([(n, n * n) for n in (10, 20, 40, 80)])
        assert slope == pytest.approx(2.0) and err == pytest.approx(0.0, abs=1e-9)

    def test_linear(self):
        slope, err = fit_scaling_exponent([(n, 7 * n) for n in (5, 50, 500)])
        assert slope == pytest.approx(1.0) and err == pytest.approx(0.0, abs=1e-9)

    def test_n_log_n(self):
        slope, _ = fit_scaling_exponent([(n, n * math.log(n)) for n in (64, 128, 256, 512, 1024)])
        assert 1.0 < slope < 1.5

    def test_degenerate(self):
        with pytest.raises(ContractViolation):
            fit_scaling_exponent([(10, 1), (20, 2)])
        with pytest.raises(ContractViolation):
            fit_scaling_exponent([(10, 1), (20, 0), (30, 3)])


class TestInstances:
    def test_random_neighbor_window(self):
        pert = PerturbationSpec(PerturbationKind.TARGET_FLIP, delta=1, variant="random_neighbor", window=0.5)
        spec = lo_spec(perturbation=pert, n_values=(40,))
        for seed in range(50):
            inst = build_instance(spec, 40, seed)
            assert inst.new_problem.evaluate(inst.x_old) <= 20 and inst.delta_true == 1

    def test_leadingones_targets_match_ball_optimum(self):
        rng = random.Random(1)
        for _ in range(20):
            n = rng.randint(4, 16)
            delta = rng.randint(1, 3)
            pert = PerturbationSpec(PerturbationKind.TARGET_FLIP, delta=delta, variant="random_neighbor",
                                    window=1.0)
            inst = build_instance(lo_spec(perturbation=pert, n_values=(n,)), n, rng.getrandbits(64))
            targets = milestone_targets("leadingones", inst, range(delta + 1))
            for i, t in targets.items():
                assert t == ball_optimum(inst.new_problem, inst.x_old, i).best_value

    def test_mst_removal_targets_match_ball_optimum(self):
        pert = PerturbationSpec(PerturbationKind.EDGE_REMOVAL, delta=2)
        spec = ExperimentSpec("mst", pert, (6,), edge_factor=1.5)
        for seed in range(10):
            inst = build_instance(spec, 6, seed)
            for i, t in milestone_targets("mst", inst, range(3)).items():
                assert t == ball_optimum(inst.new_problem, inst.x_old, i).best_value

    def test_missing_oracle_is_named(self):
        graph = random_connected_graph(12, 30, random.Random(0))
        problem = MstProblem(graph)
        x = Genome.ones(30)
        inst = ReoptInstance(problem, problem, x, (1, 0.0), 5, x)
        with pytest.raises(OracleRefusal, match="no milestone oracle for radius 4"):
            milestone_targets("mst", inst, [4])

    def test_spec_validation(self):
        with pytest.raises(ContractViolation):
            lo_spec(repetitions=0)
        with pytest.raises(ContractViolation):
            ExperimentSpec("knapsack", PerturbationSpec(PerturbationKind.TARGET_FLIP), (10,))


class TestRunExperiment:
    def test_adversarial_single_bit_mean(self):
        pert = PerturbationSpec(PerturbationKind.TARGET_FLIP, delta=1, variant="adversarial_prefix")
        res = run_experiment(lo_spec(perturbation=pert, n_values=(50,), gamma=1, repetitions=100, seed=3))
        assert check_upper_bound(res.aggregate, 1, 1, 50, 1.0).passed
        assert res.aggregate.cell(n=50).mean <= 2 * math.e * 2 * 50

    def test_rows_and_milestones(self):
        pert = PerturbationSpec(PerturbationKind.TARGET_FLIP, delta=3, variant="adversarial_prefix")
        res = run_experiment(lo_spec(perturbation=pert, n_values=(20, 30), repetitions=5, seed=1))
        assert [r.seed for r in res.rows] == [1, 2, 3, 4, 5] * 2
        for row in res.rows:
            times = [row.milestones[i] for i in range(4)]
            assert times == sorted(times) and times[0] == 1 and times[3] == row.evaluations
        cell = res.aggregate.cell(n=20)
        assert cell.runs == 5 and cell.target_hits == 5

    def test_parallel_matches_serial(self, tmp_path):
        pert = PerturbationSpec(PerturbationKind.EDGE_ADDITION, delta=2)
        spec = ExperimentSpec("mst", pert, (6, 8), repetitions=4, seed=5)
        a = run_experiment(spec, jobs=1)
        b = run_experiment(spec, jobs=2)
        write_results(a.rows, a.aggregate, tmp_path / "a")
        write_results(b.rows, b.aggregate, tmp_path / "b")
        for name in ("runs.csv", "aggregate.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_oea_rows_have_no_gamma(self):
        pert = PerturbationSpec(PerturbationKind.BOUND_SHIFT, delta=1)
        res = run_experiment(ExperimentSpec("linear", pert, (10,), algorithm="oea", repetitions=3))
        assert all(r.gamma is None for r in res.rows)
        assert all(m.bound is None for m in res.aggregate.cells[0].milestones)


def make_row(seed, n=10, evals=50, t=(1, 50)):
    return TrialRow(seed, n, 1, 1, "rea", "leadingones", evals, "TargetHit", dict(enumerate(t)))


class TestPersistence:
    def test_empty(self, tmp_path):
        csv_path, _ = write_results([], aggregate([]), tmp_path)
        assert csv_path.read_text() == "seed,n,gamma,delta,algorithm,problem,evaluations,termination\n"

    def test_two_records(self, tmp_path):
        rows = [make_row(0), make_row(1, evals=70, t=(1, None))]
        csv_path, _ = write_results(rows, aggregate(rows), tmp_path)
        lines = csv_path.read_text().splitlines()
        assert len(lines) == 3
        assert lines[0].endswith("termination,T_0,T_1")
        assert lines[2] == "1,10,1,1,rea,leadingones,70,TargetHit,1,"

    def test_round_trip(self, tmp_path):
        pert = PerturbationSpec(PerturbationKind.BOUND_SHIFT, delta=2, sign=-1)
        res = run_experiment(ExperimentSpec("linear", pert, (10, 14, 18), repetitions=4, seed=8))
        csv_path, _ = write_results(res.rows, res.aggregate, tmp_path)
        rows = read_results(csv_path)
        assert rows == res.rows
        again = aggregate(rows, res.aggregate.epsilon)
        assert again.to_dict() == res.aggregate.to_dict()
        assert format_summary(again) == format_summary(res.aggregate)

    def test_unwritable_path_is_named(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="file"):
            write_results([], aggregate([]), blocker / "sub")

    def test_bad_csv(self, tmp_path):
        bad = tmp_path / "runs.csv"
        bad.write_text("seed,n\n1,2\n")
        with pytest.raises(ContractViolation, match="header"):
            read_results(bad)

    @settings(max_examples=30)
    @given(st.lists(st.tuples(st.integers(1, 10 ** 6), st.integers(1, 5)), min_size=1, max_size=20))
    def test_aggregate_counts(self, data):
        rows = [make_row(s, n=10 * k, evals=e) for s, (e, k) in enumerate(data)]
        agg = aggregate(rows)
        assert sum(c.runs for c in agg.cells) == len(rows)
        for c in agg.cells:
            assert isinstance(c, CellStats) and c.min <= c.median <= c.max
