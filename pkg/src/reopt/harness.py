"""Repeated-run experiments: instance generation, milestones, aggregation, persistence.

Repetition ``r`` of an experiment uses the seed ``base_seed + r``.  From that
seed and the size parameter ``n`` two independent 64-bit streams are derived
with :class:`numpy.random.SeedSequence`: one builds the random instance, the
other drives the algorithm.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .algorithm import ReaConfig, RunBudget, RunRecord, Termination, oea_run, rea_run
from .bitstring import ContractViolation, MutationConfig, make_rng
from .graphs import random_connected_graph, random_new_edges
from .oracles import (
    OracleRefusal,
    ball_optimum,
    lemma_hami_witness,
    leadingones_ball_value,
    linear_ball_value,
    mst_oracle,
    mst_removal_witness,
)
from .perturbations import (
    PerturbationKind,
    PerturbationSpec,
    ReoptInstance,
    make_leadingones_reopt,
    make_linear_reopt,
    make_mst_addition_reopt,
    make_mst_removal_reopt,
)
from .problems import binval_weights, onemax_weights

__all__ = [
    "AggregateResult",
    "CellStats",
    "ExperimentResult",
    "ExperimentSpec",
    "MilestoneStats",
    "ScalingFit",
    "TrialRow",
    "UpperBoundReport",
    "aggregate",
    "build_instance",
    "check_upper_bound",
    "fit_scaling_exponent",
    "format_summary",
    "milestone_targets",
    "read_results",
    "run_experiment",
    "tail_cap",
    "upper_bound",
    "write_results",
]

PROBLEMS = ("leadingones", "linear", "mst")
ALGORITHMS = ("rea", "oea")
DEFAULT_KIND = {
    "leadingones": PerturbationKind.TARGET_FLIP,
    "linear": PerturbationKind.BOUND_SHIFT,
    "mst": PerturbationKind.EDGE_ADDITION,
}
CSV_FIXED = ["seed", "n", "gamma", "delta", "algorithm", "problem", "evaluations", "termination"]


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one experiment.

    ``n_values`` are genome lengths for ``leadingones``/``linear`` and node
    counts for ``mst`` (which then has ``round(edge_factor * n)`` edges).
    ``gamma=None`` means gamma = delta.  ``max_evaluations=None`` gives each
    run ``budget_factor * L**2`` evaluations for genome length ``L``.
    """

    problem: str
    perturbation: PerturbationSpec
    n_values: tuple
    algorithm: str = "rea"
    gamma: Optional[int] = None
    repetitions: int = 10
    seed: int = 0
    max_evaluations: Optional[int] = None
    budget_factor: float = 50.0
    milestones: Optional[tuple] = None
    epsilon: float = 1.0
    weights: str = "uniform"
    weight_low: int = 1
    weight_high: int = 1000
    bound_fraction: float = 0.5
    edge_factor: float = 2.0

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ContractViolation(f"unknown problem {self.problem!r}; choose from {PROBLEMS}")
        if self.algorithm not in ALGORITHMS:
            raise ContractViolation(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if self.repetitions < 1:
            raise ContractViolation("repetitions must be >= 1")
        if not self.n_values:
            raise ContractViolation("at least one n value is required")
        if self.weights not in ("uniform", "onemax", "binval"):
            raise ContractViolation(f"unknown weight family {self.weights!r}")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        if self.milestones is not None:
            object.__setattr__(self, "milestones", tuple(sorted(set(int(i) for i in self.milestones))))

    @property
    def delta(self) -> int:
        return self.perturbation.delta

    @property
    def effective_gamma(self) -> Optional[int]:
        if self.algorithm == "oea":
            return None
        return self.delta if self.gamma is None else self.gamma

    @property
    def radii(self) -> tuple:
        return self.milestones if self.milestones is not None else tuple(range(self.delta + 1))


@dataclass
class TrialRow:
    seed: int
    n: int
    gamma: Optional[int]
    delta: int
    algorithm: str
    problem: str
    evaluations: int
    termination: str
    milestones: dict = field(default_factory=dict)


@dataclass
class MilestoneStats:
    radius: int
    reached: int
    mean: Optional[float]
    bound: Optional[float]
    threshold: Optional[float]
    exceed_rate: Optional[float]
    tail_cap: Optional[float]


@dataclass
class CellStats:
    problem: str
    algorithm: str
    gamma: Optional[int]
    delta: int
    n: int
    runs: int
    target_hits: int
    mean: float
    median: float
    min: int
    max: int
    std: float
    milestones: list
    samples: dict = field(default_factory=dict, repr=False)


@dataclass
class ScalingFit:
    problem: str
    algorithm: str
    gamma: Optional[int]
    delta: int
    points: list
    exponent: float
    stderr: float


@dataclass
class AggregateResult:
    epsilon: float
    cells: list
    fits: list

    def cell(self, **where) -> CellStats:
        found = [c for c in self.cells if all(getattr(c, k) == v for k, v in where.items())]
        if len(found) != 1:
            raise KeyError(f"{len(found)} cells match {where}")
        return found[0]

    def fit(self, **where) -> ScalingFit:
        found = [f for f in self.fits if all(getattr(f, k) == v for k, v in where.items())]
        if len(found) != 1:
            raise KeyError(f"{len(found)} fits match {where}")
        return found[0]

    def to_dict(self) -> dict:
        cells = []
        for c in self.cells:
            d = asdict(c)
            d.pop("samples")
            cells.append(d)
        return {"epsilon": self.epsilon, "cells": cells, "fits": [asdict(f) for f in self.fits]}


@dataclass
class ExperimentResult:
    rows: list
    aggregate: AggregateResult
    runs: list  # RunRecord per row, same order
    instances: list = field(default_factory=list, repr=False)


# -- bounds ---------------------------------------------------------------

def upper_bound(i: int, gamma: int, n: int) -> float:
    """Expected-time cap for reaching the radius-``i`` optimum: ``2e(gamma+1) i n`` inside the
    covered radius, ``2e n^2`` otherwise."""
    if i <= gamma + 1:
        return 2.0 * math.e * (gamma + 1) * i * n
    return 2.0 * math.e * n * n


def tail_cap(i: int, epsilon: float) -> float:
    """Probability cap for exceeding ``(1 + epsilon)`` times the expected-time bound."""
    return math.exp(-(epsilon ** 2) * i / (2.0 * (1.0 + epsilon)))


# -- instances --------------------------------------------------------------

def _derived_seeds(seed: int, n: int) -> tuple:
    state = np.random.SeedSequence([int(seed) & (2 ** 64 - 1), int(n)]).generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


def _linear_weights(spec: ExperimentSpec, n: int, rng) -> list:
    if spec.weights == "onemax":
        return onemax_weights(n)
    if spec.weights == "binval":
        return binval_weights(n)
    return [rng.randint(spec.weight_low, spec.weight_high) for _ in range(n)]


def _removal_ids(graph, pert: PerturbationSpec, rng) -> list:
    if pert.edge_ids is not None:
        return list(pert.edge_ids)
    pool = sorted(mst_oracle(graph).edge_ids) if pert.selection == "tree" else list(range(graph.m))
    for _ in range(1000):
        ids = rng.sample(pool, pert.delta)
        keep = set(range(graph.m)) - set(ids)
        if graph.is_connected(sorted(keep)):
            return ids
    raise ContractViolation(f"could not find {pert.delta} removable edges keeping the graph connected")


def build_instance(spec: ExperimentSpec, n: int, instance_seed: int) -> ReoptInstance:
    pert = spec.perturbation
    rng = make_rng(instance_seed)
    if spec.problem == "leadingones":
        if pert.kind is not PerturbationKind.TARGET_FLIP:
            raise ContractViolation("leadingones supports only target_flip perturbations")
        if pert.variant == "adversarial_prefix":
            return make_leadingones_reopt(n, variant="adversarial_prefix", delta=pert.delta)
        positions = pert.positions
        if positions is None:
            window = int(math.floor(pert.window * n)) + 1
            positions = rng.sample(range(min(window, n)), pert.delta)
        return make_leadingones_reopt(n, flip_positions=positions, variant="random_neighbor")
    if spec.problem == "linear":
        if pert.kind is not PerturbationKind.BOUND_SHIFT:
            raise ContractViolation("linear supports only bound_shift perturbations")
        weights = _linear_weights(spec, n, rng)
        b_old = int(round(spec.bound_fraction * n))
        return make_linear_reopt(weights, b_old, pert.delta, pert.sign)
    edges = int(round(spec.edge_factor * n))
    graph = random_connected_graph(n, edges, rng)
    if pert.kind is PerturbationKind.EDGE_ADDITION:
        new_edges = list(pert.edges) if pert.edges is not None else random_new_edges(graph, pert.delta, rng)
        return make_mst_addition_reopt(graph, new_edges)
    if pert.kind is PerturbationKind.EDGE_REMOVAL:
        return make_mst_removal_reopt(graph, _removal_ids(graph, pert, rng))
    raise ContractViolation(f"mst does not support {pert.kind.value} perturbations")


def milestone_targets(problem: str, inst: ReoptInstance, radii: Sequence[int]) -> dict:
    """Fitness of the best point within each radius of ``x_old`` under the new instance."""
    new = inst.new_problem
    x_old = inst.x_old
    out = {}
    for i in radii:
        if i >= inst.delta_true:
            out[i] = inst.target_quality
        elif problem == "leadingones":
            out[i] = leadingones_ball_value(new, x_old, i)
        elif problem == "linear":
            out[i] = linear_ball_value(new, x_old, i)
        elif "added_ids" in inst.extras:
            out[i] = new.evaluate(lemma_hami_witness(x_old, new.graph, i))
        elif "removed_ids" in inst.extras:
            out[i] = new.evaluate(mst_removal_witness(x_old, new.graph, i))
        else:
            try:
                out[i] = ball_optimum(new, x_old, i).best_value
            except OracleRefusal as exc:
                raise OracleRefusal(f"no milestone oracle for radius {i}: {exc}") from None
    return out


# -- execution --------------------------------------------------------------

def _trial(args) -> tuple:
    spec, n, rep = args
    seed = spec.seed + rep
    instance_seed, algo_seed = _derived_seeds(seed, n)
    inst = build_instance(spec, n, instance_seed)
    length = inst.x_old.n
    targets = milestone_targets(spec.problem, inst, spec.radii)
    limit = spec.max_evaluations or max(1, int(spec.budget_factor * length * length))
    budget = RunBudget(limit, inst.target_quality)
    problem = inst.new_problem
    if spec.algorithm == "rea":
        gamma = min(spec.effective_gamma, length)
        cfg = ReaConfig(gamma, MutationConfig(), problem.direction)
        record = rea_run(inst.x_old, problem, cfg, budget, algo_seed, targets)
    else:
        record = oea_run(inst.x_old, problem, MutationConfig(), budget, algo_seed, targets)
    row = TrialRow(
        seed=seed,
        n=length,
        gamma=spec.effective_gamma,
        delta=spec.delta,
        algorithm=spec.algorithm,
        problem=spec.problem,
        evaluations=record.evaluations_used,
        termination=record.termination.value,
        milestones=dict(record.milestones),
    )
    return row, record, inst


def run_experiment(
    spec: ExperimentSpec,
    jobs: Optional[int] = 1,
    progress: Optional[Callable[[int, int], None]] = None,
    keep_instances: bool = False,
) -> ExperimentResult:
    """Run every (n, repetition) pair and aggregate.

    Output does not depend on ``jobs``; results are folded in (n, repetition)
    order.
    """
    tasks = [(spec, n, rep) for n in spec.n_values for rep in range(spec.repetitions)]
    jobs = (os.cpu_count() or 1) if jobs is None else max(1, jobs)
    results = []
    if jobs == 1:
        for k, task in enumerate(tasks, 1):
            results.append(_trial(task))
            if progress:
                progress(k, len(tasks))
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for k, res in enumerate(pool.map(_trial, tasks, chunksize=4), 1):
                results.append(res)
                if progress:
                    progress(k, len(tasks))
    rows = [r for r, _, _ in results]
    runs = [rec for _, rec, _ in results]
    instances = [inst for _, _, inst in results] if keep_instances else []
    return ExperimentResult(rows, aggregate(rows, spec.epsilon), runs, instances)


# -- statistics -----------------------------------------------------------

def fit_scaling_exponent(points: Sequence[tuple]) -> tuple:
    """Least-squares slope of ``log(mean)`` against ``log(n)`` and its standard error."""
    pts = [(float(n), float(m)) for n, m in points]
    if len({n for n, _ in pts}) < 3:
        raise ContractViolation("scaling fit needs at least three distinct n values")
    if any(n <= 0 or m <= 0 for n, m in pts):
        raise ContractViolation("scaling fit needs positive n and means")
    x = np.log([n for n, _ in pts])
    y = np.log([m for _, m in pts])
    design = np.column_stack([x, np.ones_like(x)])
    coef, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    slope, intercept = float(coef[0]), float(coef[1])
    resid = y - (slope * x + intercept)
    dof = len(pts) - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(np.sum(resid ** 2)) / dof / sxx) if dof > 0 else 0.0
    return slope, stderr


def _config_key(row: TrialRow) -> tuple:
    return (row.problem, row.algorithm, row.gamma, row.delta)


def _sort_key(key: tuple) -> tuple:
    problem, algorithm, gamma, delta = key[:4]
    return (problem, algorithm, -1 if gamma is None else gamma, delta) + key[4:]


def aggregate(rows: Sequence[TrialRow], epsilon: float = 1.0) -> AggregateResult:
    groups: dict = {}
    for row in rows:
        groups.setdefault(_config_key(row) + (row.n,), []).append(row)
    cells = []
    for key in sorted(groups, key=_sort_key):
        problem, algorithm, gamma, delta, n = key
        group = groups[key]
        evals = [r.evaluations for r in group]
        radii = sorted({i for r in group for i in r.milestones})
        samples = {i: [r.milestones.get(i) for r in group] for i in radii}
        mstats = []
        for i in radii:
            reached = [t for t in samples[i] if t is not None]
            bound = threshold = rate = cap = None
            if gamma is not None and i >= 1:
                bound = upper_bound(i, gamma, n)
                threshold = (1.0 + epsilon) * bound
                rate = sum(1 for t in samples[i] if t is None or t >= threshold) / len(group)
                cap = tail_cap(i if i <= gamma + 1 else n, epsilon)
            mstats.append(MilestoneStats(
                radius=i,
                reached=len(reached),
                mean=statistics.fmean(reached) if reached else None,
                bound=bound,
                threshold=threshold,
                exceed_rate=rate,
                tail_cap=cap,
            ))
        cells.append(CellStats(
            problem=problem,
            algorithm=algorithm,
            gamma=gamma,
            delta=delta,
            n=n,
            runs=len(group),
            target_hits=sum(1 for r in group if r.termination == Termination.TARGET_HIT.value),
            mean=statistics.fmean(evals),
            median=float(statistics.median(evals)),
            min=min(evals),
            max=max(evals),
            std=statistics.stdev(evals) if len(evals) > 1 else 0.0,
            milestones=mstats,
            samples=samples,
        ))
    fits = []
    by_config: dict = {}
    for c in cells:
        by_config.setdefault((c.problem, c.algorithm, c.gamma, c.delta), []).append(c)
    for config, group in by_config.items():
        points = [(c.n, c.mean) for c in group]
        if len({n for n, _ in points}) >= 3:
            exponent, stderr = fit_scaling_exponent(points)
            fits.append(ScalingFit(*config, points=[list(p) for p in points],
                                   exponent=exponent, stderr=stderr))
    return AggregateResult(epsilon, cells, fits)


@dataclass
class UpperBoundReport:
    radius: int
    gamma: int
    n: int
    epsilon: float
    mean: Optional[float]
    bound: float
    mean_ok: bool
    exceed_rate: float
    tail_cap: float
    allowance: float
    tail_ok: bool

    @property
    def passed(self) -> bool:
        return self.mean_ok and self.tail_ok


def check_upper_bound(result: AggregateResult, i: int, gamma: int, n: int, epsilon: float,
                      **where) -> UpperBoundReport:
    """Compare the radius-``i`` hitting times of one cell with the expected-time and tail bounds.

    Runs that never reached the milestone count as exceedances and make the
    mean check fail.
    """
    cell = result.cell(gamma=gamma, n=n, **where)
    if i not in cell.samples:
        raise ContractViolation(f"milestone {i} was not tracked")
    times = cell.samples[i]
    bound = upper_bound(i, gamma, n)
    threshold = (1.0 + epsilon) * bound
    cap = tail_cap(i if i <= gamma + 1 else n, epsilon)
    runs = len(times)
    rate = sum(1 for t in times if t is None or t >= threshold) / runs
    allowance = 3.0 * math.sqrt(cap * (1.0 - cap) / runs)
    complete = all(t is not None for t in times)
    mean = statistics.fmean(times) if complete else None
    return UpperBoundReport(
        radius=i, gamma=gamma, n=n, epsilon=epsilon, mean=mean, bound=bound,
        mean_ok=complete and mean <= bound,
        exceed_rate=rate, tail_cap=cap, allowance=allowance,
        tail_ok=rate <= cap + allowance,
    )


# -- persistence --------------------------------------------------------------

def _fmt(value) -> str:
    return "" if value is None else str(value)


def write_results(rows: Sequence[TrialRow], result: AggregateResult, path) -> tuple:
    """Write ``runs.csv`` and ``aggregate.json`` into directory ``path``."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        radii = sorted({i for r in rows for i in r.milestones})
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_FIXED + [f"T_{i}" for i in radii])
        for r in rows:
            writer.writerow([r.seed, r.n, _fmt(r.gamma), r.delta, r.algorithm, r.problem,
                             r.evaluations, r.termination] + [_fmt(r.milestones.get(i)) for i in radii])
        csv_path = out / "runs.csv"
        csv_path.write_text(buf.getvalue())
        json_path = out / "aggregate.json"
        json_path.write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return csv_path, json_path


def _opt_int(text: str) -> Optional[int]:
    return None if text == "" else int(text)


def read_results(path) -> list:
    """Parse a ``runs.csv`` written by :func:`write_results`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ContractViolation(f"{path}: empty file") from None
        if header[:len(CSV_FIXED)] != CSV_FIXED:
            raise ContractViolation(f"{path}: unexpected header {header}")
        radii = []
        for name in header[len(CSV_FIXED):]:
            if not name.startswith("T_"):
                raise ContractViolation(f"{path}: unexpected column {name!r}")
            radii.append(int(name[2:]))
        rows = []
        for lineno, rec in enumerate(reader, 2):
            if len(rec) != len(header):
                raise ContractViolation(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            fixed = rec[:len(CSV_FIXED)]
            rows.append(TrialRow(
                seed=int(fixed[0]),
                n=int(fixed[1]),
                gamma=_opt_int(fixed[2]),
                delta=int(fixed[3]),
                algorithm=fixed[4],
                problem=fixed[5],
                evaluations=int(fixed[6]),
                termination=fixed[7],
                milestones={i: _opt_int(v) for i, v in zip(radii, rec[len(CSV_FIXED):])},
            ))
    return rows


def format_summary(result: AggregateResult) -> str:
    """Fixed-width table of cells followed by the scaling fits."""
    head = (f"{'problem':<12}{'alg':<5}{'n':>6}{'gamma':>6}{'delta':>6}{'runs':>6}{'hits':>6}"
            f"{'mean':>14}{'median':>12}{'min':>10}{'max':>10}{'std':>12}")
    lines = [head, "-" * len(head)]
    for c in result.cells:
        lines.append(
            f"{c.problem:<12}{c.algorithm:<5}{c.n:>6}{_fmt(c.gamma):>6}{c.delta:>6}{c.runs:>6}"
            f"{c.target_hits:>6}{c.mean:>14.2f}{c.median:>12.1f}{c.min:>10}{c.max:>10}{c.std:>12.2f}"
        )
    if result.fits:
        lines.append("")
        lines.append(f"{'problem':<12}{'alg':<5}{'gamma':>6}{'delta':>6}{'exponent':>10}{'stderr':>10}")
        for f in result.fits:
            lines.append(f"{f.problem:<12}{f.algorithm:<5}{_fmt(f.gamma):>6}{f.delta:>6}"
                         f"{f.exponent:>10.3f}{f.stderr:>10.3f}")
    return "\n".join(lines)


def stderr_progress(label: str) -> Callable[[int, int], None]:
    def report(done: int, total: int) -> None:
        if done == total or done % max(1, total // 10) == 0:
            print(f"[{label}] {done}/{total} runs", file=sys.stderr)
    return report
