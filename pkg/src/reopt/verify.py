"""Oracle cross-validation and algorithm invariant suites behind ``reopt verify``.

Each check returns a :class:`CheckResult`; nothing here raises on a failed
check, so the CLI can report every line.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Optional

import numpy as np

from .algorithm import (
    ReaConfig,
    ReaState,
    RunBudget,
    Slot,
    check_state_invariants,
    rea_init,
    rea_run,
    rea_select_parent,
    rea_step,
)
from .bitstring import Genome, MutationConfig, flip_bits, make_rng, standard_bit_mutation
from .graphs import GraphInstance, random_connected_graph, random_new_edges
from .oracles import (
    NeutralBitModel,
    ball_optimum,
    greedy_linear_optimum,
    lemma_hami_witness,
    leadingones_ball_value,
    linear_ball_value,
    mst_oracle,
    mst_removal_witness,
    neutral_bit_probability,
)
from .perturbations import make_linear_reopt, make_mst_addition_reopt, make_mst_removal_reopt
from .problems import Direction, LeadingOnes, LinearConstrained, MstProblem

__all__ = [
    "CheckResult",
    "INVARIANT_CHECKS",
    "ORACLE_CHECKS",
    "neutral_bit_monte_carlo",
    "run_checks",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}".rstrip()


# -- brute-force references (independent of the oracles under test) ---------

def _brute_linear_optimum(inst: LinearConstrained):
    return max(inst.evaluate(Genome(inst.n, b)) for b in range(1 << inst.n))


def _brute_mst_weight(graph: GraphInstance):
    """Lightest connected spanning subset of exactly nodes-1 edges, or None."""
    best = None
    for ids in combinations(range(graph.m), graph.nodes - 1):
        if graph.is_connected(ids):
            w = sum(graph.edges[i][2] for i in ids)
            if best is None or w < best:
                best = w
    return best


def _bfs_components(nodes: int, edges) -> int:
    adj = {v: [] for v in range(nodes)}
    for u, v, _ in edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = set()
    count = 0
    for s in range(nodes):
        if s in seen:
            continue
        count += 1
        stack = [s]
        seen.add(s)
        while stack:
            a = stack.pop()
            for b in adj[a]:
                if b not in seen:
                    seen.add(b)
                    stack.append(b)
    return count


def _sphere_min(problem: MstProblem, anchor: Genome, i: int):
    best = None
    for flips in combinations(range(anchor.n), i):
        value = problem.evaluate(flip_bits(anchor, flips))
        if best is None or value < best:
            best = value
    return best


def _small_graph(rng: random.Random, low_nodes=4, high_nodes=8, integer_weights=False) -> GraphInstance:
    nodes = rng.randint(low_nodes, high_nodes)
    max_edges = nodes * (nodes - 1) // 2
    edges = rng.randint(nodes - 1, min(max_edges, 2 * nodes))
    graph = random_connected_graph(nodes, edges, rng)
    if integer_weights:
        graph = GraphInstance(nodes, tuple((u, v, rng.randint(1, 4)) for u, v, _ in graph.edges))
    return graph


# -- oracle cross-validation -------------------------------------------------

def check_greedy_linear(seed: int, count: int = 200) -> CheckResult:
    rng = make_rng(seed)
    for k in range(count):
        n = rng.randint(1, 12)
        weights = [rng.randint(0, 20) for _ in range(n)]
        inst = LinearConstrained(tuple(weights), rng.randint(0, n))
        _, value = greedy_linear_optimum(inst)
        brute = _brute_linear_optimum(inst)
        if value != brute:
            return CheckResult("oracle: greedy linear optimum vs enumeration", False,
                               f"instance {k}: greedy {value} != brute {brute}")
    return CheckResult("oracle: greedy linear optimum vs enumeration", True, f"{count} instances")


def check_mst_oracle(seed: int, count: int = 200) -> CheckResult:
    rng = make_rng(seed)
    for k in range(count):
        graph = _small_graph(rng, integer_weights=bool(k % 2))
        result = mst_oracle(graph)
        brute = _brute_mst_weight(graph)
        if result.components != 1 or abs(result.weight - brute) > 1e-9 * max(1.0, brute):
            return CheckResult("oracle: Kruskal vs spanning-subset enumeration", False,
                               f"instance {k}: kruskal {result.weight} != brute {brute}")
    return CheckResult("oracle: Kruskal vs spanning-subset enumeration", True, f"{count} graphs")


def check_mst_components(seed: int, count: int = 200) -> CheckResult:
    rng = make_rng(seed)
    for k in range(count):
        graph = _small_graph(rng, 2, 10)
        problem = MstProblem(graph)
        x = Genome(graph.m, rng.getrandbits(graph.m))
        c, _ = problem.evaluate(x)
        ref = _bfs_components(graph.nodes, [graph.edges[i] for i in x.ones_positions()])
        if c != ref:
            return CheckResult("fitness: MST component count vs BFS", False, f"instance {k}: {c} != {ref}")
    return CheckResult("fitness: MST component count vs BFS", True, f"{count} selections")


def check_leadingones_ball(seed: int, count: int = 100) -> CheckResult:
    rng = make_rng(seed)
    for k in range(count):
        n = rng.randint(2, 12)
        sigma = list(range(n))
        rng.shuffle(sigma)
        problem = LeadingOnes(Genome(n, rng.getrandbits(n)), sigma)
        anchor = Genome(n, rng.getrandbits(n))
        i = rng.randint(0, n)
        closed = leadingones_ball_value(problem, anchor, i)
        brute = ball_optimum(problem, anchor, i).best_value
        if closed != brute:
            return CheckResult("oracle: LeadingOnes ball closed form vs enumeration", False,
                               f"instance {k}: {closed} != {brute}")
    return CheckResult("oracle: LeadingOnes ball closed form vs enumeration", True, f"{count} balls")


def check_linear_ball(seed: int, count: int = 100) -> CheckResult:
    rng = make_rng(seed)
    for k in range(count):
        n = rng.randint(2, 12)
        inst = LinearConstrained(tuple(rng.randint(0, 30) for _ in range(n)), rng.randint(0, n))
        anchor = Genome(n, rng.getrandbits(n))
        i = rng.randint(0, n)
        if linear_ball_value(inst, anchor, i) != ball_optimum(inst, anchor, i).best_value:
            return CheckResult("oracle: linear ball formula vs enumeration", False, f"instance {k}")
    return CheckResult("oracle: linear ball formula vs enumeration", True, f"{count} balls")


def check_penalty_dominance(seed: int, count: int = 200) -> CheckResult:
    rng = make_rng(seed)
    for k in range(count):
        n = rng.randint(1, 10)
        inst = LinearConstrained(tuple(rng.uniform(-50, 50) for _ in range(n)), rng.randint(0, n - 1))
        feasible = []
        infeasible = []
        for b in range(1 << n):
            (infeasible if b.bit_count() > inst.bound else feasible).append(inst.evaluate(Genome(n, b)))
        if infeasible and min(feasible) <= max(infeasible):
            return CheckResult("fitness: every feasible point beats every infeasible one", False,
                               f"instance {k}")
    return CheckResult("fitness: every feasible point beats every infeasible one", True, f"{count} instances")


def check_addition_structure(seed: int, count: int = 200) -> CheckResult:
    """New MST inside old MST plus added edges; removal-chain witness optimal at every distance."""
    rng = make_rng(seed)
    name = "oracle: edge-addition MST structure and distance-i witnesses"
    for k in range(count):
        graph = _small_graph(rng, 4, 10)
        room = graph.nodes * (graph.nodes - 1) // 2 - graph.m
        if room < 1:
            continue
        delta = rng.randint(1, min(4, room))
        inst = make_mst_addition_reopt(graph, random_new_edges(graph, delta, rng))
        new = inst.new_problem
        old_tree = {i for i in range(graph.m) if inst.old_solution[i]}
        allowed = old_tree | set(inst.extras["added_ids"])
        new_tree = mst_oracle(new.graph).edge_ids
        if not new_tree <= allowed:
            return CheckResult(name, False, f"instance {k}: new MST uses edges {sorted(new_tree - allowed)}")
        previous = None
        for i in range(delta + 1):
            witness = lemma_hami_witness(inst.x_old, new.graph, i)
            value = new.evaluate(witness)
            if (witness.bits ^ inst.x_old.bits).bit_count() != i:
                return CheckResult(name, False, f"instance {k}: witness {i} at wrong distance")
            sphere = _sphere_min(new, inst.x_old, i)
            if value != sphere or value != ball_optimum(new, inst.x_old, i).best_value:
                return CheckResult(name, False, f"instance {k}, i={i}: witness {value} vs brute {sphere}")
            if previous is not None:
                prev_genome, prev_value = previous
                if not value[1] <= prev_value[1]:
                    return CheckResult(name, False, f"instance {k}: weight increased at i={i}")
                removed = prev_genome.bits & ~witness.bits
                if witness.bits & ~prev_genome.bits or removed.bit_count() != 1:
                    return CheckResult(name, False, f"instance {k}: witness {i} is not one removal away")
            previous = (witness, value)
        if previous[1] != inst.target_quality:
            return CheckResult(name, False, f"instance {k}: final witness is not an MST")
    return CheckResult(name, True, f"{count} instances")


def check_removal_witness(seed: int, count: int = 100) -> CheckResult:
    rng = make_rng(seed)
    name = "oracle: edge-removal forest completion vs enumeration"
    done = 0
    while done < count:
        graph = _small_graph(rng, 4, 9)
        tree = sorted(mst_oracle(graph).edge_ids)
        delta = rng.randint(1, min(3, len(tree)))
        ids = rng.sample(tree, delta)
        keep = [i for i in range(graph.m) if i not in ids]
        if not graph.is_connected(keep):
            continue
        inst = make_mst_removal_reopt(graph, ids)
        new = inst.new_problem
        for i in range(inst.delta_true + 2):
            value = new.evaluate(mst_removal_witness(inst.x_old, new.graph, i))
            if value != ball_optimum(new, inst.x_old, i).best_value:
                return CheckResult(name, False, f"instance {done}, i={i}")
        done += 1
    return CheckResult(name, True, f"{count} instances")


def check_perturbation_delta(seed: int, count: int = 60) -> CheckResult:
    """x_old optimal for the old instance and delta equal to the smallest sufficient radius."""
    rng = make_rng(seed)
    name = "perturbations: x_old optimal and delta = minimal radius"
    for k in range(count):
        kind = k % 3
        if kind == 0:
            n = rng.randint(4, 12)
            b_old = rng.randint(1, n - 1)
            delta = rng.randint(1, min(b_old, n - b_old))
            inst = make_linear_reopt([rng.randint(0, 9) for _ in range(n)], b_old, delta, rng.choice((1, -1)))
            old_best = _brute_linear_optimum(inst.old_problem)
        else:
            graph = _small_graph(rng, 4, 7)
            if kind == 1 and graph.m < graph.nodes * (graph.nodes - 1) // 2:
                inst = make_mst_addition_reopt(graph, random_new_edges(graph, 1, rng))
            else:
                ids = rng.sample(range(graph.m), 1)
                if not graph.is_connected([i for i in range(graph.m) if i not in ids]):
                    continue
                inst = make_mst_removal_reopt(graph, ids)
            old_best = (1, _brute_mst_weight(graph))
        old_value = inst.old_problem.evaluate(inst.old_solution)
        if old_value != old_best and not (
            isinstance(old_value, tuple) and old_value[0] == 1 and abs(old_value[1] - old_best[1]) < 1e-9
        ):
            return CheckResult(name, False, f"instance {k}: x_old not optimal ({old_value} vs {old_best})")
        new = inst.new_problem
        radius = next(
            i for i in range(inst.x_old.n + 1)
            if _reaches(new, ball_optimum(new, inst.x_old, i).best_value, inst.target_quality)
        )
        if radius != inst.delta_true:
            return CheckResult(name, False, f"instance {k}: minimal radius {radius} != delta {inst.delta_true}")
    return CheckResult(name, True, f"{count} instances")


def neutral_bit_monte_carlo(n: int, t: int, chains: int = 1_000_000, seed: int = 0,
                            chunk: int = 250_000) -> float:
    """Fraction of independent chains whose bit is back at its start after ``t`` steps,
    each step flipping it with probability 1/n."""
    gen = np.random.default_rng(seed)
    back = 0
    for start in range(0, chains, chunk):
        size = min(chunk, chains - start)
        state = np.zeros(size, dtype=bool)
        for _ in range(t):
            state ^= gen.random(size) < 1.0 / n
        back += size - int(state.sum())
    return back / chains


def neutral_bit_cells(ns=(10, 100)) -> list:
    return [(n, t) for n in ns for t in (1, n, int(round(n * math.log(n))))]


def check_neutral_bit(seed: int, chains: int = 1_000_000, tol: float = 0.002) -> CheckResult:
    name = "oracle: neutral-bit return probability vs simulated chains"
    worst = 0.0
    for k, (n, t) in enumerate(neutral_bit_cells()):
        formula = neutral_bit_probability(NeutralBitModel(n, t))
        err = abs(neutral_bit_monte_carlo(n, t, chains, seed + k) - formula)
        worst = max(worst, err)
        if err > tol:
            return CheckResult(name, False, f"n={n}, t={t}: off by {err:.5f}")
    return CheckResult(name, True, f"max deviation {worst:.5f} over {chains} chains per cell")


def _reaches(problem, value, target) -> bool:
    return value >= target if problem.direction is Direction.MAXIMIZE else value <= target


# -- algorithm invariants --------------------------------------------------

def check_slot_invariants(seed: int) -> CheckResult:
    name = "algorithm: slot distance invariant after every step"
    rng = make_rng(seed)
    try:
        for k in range(30):
            n = rng.randint(4, 30)
            gamma = rng.randint(0, min(5, n))
            if k % 3 == 0:
                problem = LeadingOnes(Genome(n, rng.getrandbits(n)))
            elif k % 3 == 1:
                problem = LinearConstrained(tuple(rng.randint(1, 9) for _ in range(n)), rng.randint(0, n))
            else:
                problem = MstProblem(_small_graph(rng, 4, 9))
            x_old = Genome(problem.n, rng.getrandbits(problem.n))
            cfg = ReaConfig(min(gamma, problem.n), MutationConfig(), problem.direction)
            rea_run(x_old, problem, cfg, RunBudget(2000), rng.getrandbits(64), debug=True)
    except AssertionError as exc:
        return CheckResult(name, False, str(exc))
    return CheckResult(name, True, "30 debug runs x 2000 evaluations")


def check_elitism(seed: int) -> CheckResult:
    name = "algorithm: best and slot fitness never worsen"
    rng = make_rng(seed)
    for k in range(20):
        n = rng.randint(5, 25)
        if k % 2:
            graph = random_connected_graph(8, 16, rng)
            problem = MstProblem(graph)
        else:
            problem = LinearConstrained(tuple(rng.randint(1, 50) for _ in range(n)), rng.randint(0, n))
        better_eq = (lambda a, b: a >= b) if problem.direction is Direction.MAXIMIZE else (lambda a, b: a <= b)
        cfg = ReaConfig(rng.randint(0, 4), MutationConfig(), problem.direction)
        state = rea_init(Genome(problem.n, rng.getrandbits(problem.n)), problem, cfg)
        step_rng = make_rng(rng.getrandbits(64))
        for _ in range(1500):
            before_best = state.best.fitness
            before = [s.fitness if s else None for s in state.slots]
            rea_step(state, problem, cfg, step_rng)
            if not better_eq(state.best.fitness, before_best):
                return CheckResult(name, False, f"run {k}: best worsened")
            for old, s in zip(before, state.slots):
                if old is not None and not better_eq(s.fitness, old):
                    return CheckResult(name, False, f"run {k}: a slot worsened")
    return CheckResult(name, True, "20 runs x 1500 steps")


class _ConstantProblem:
    direction = Direction.MAXIMIZE
    worst = float("-inf")

    def __init__(self, n):
        self.n = n

    def evaluate(self, x):
        return 0


def check_equal_acceptance(seed: int) -> CheckResult:
    name = "algorithm: equal fitness replaces best"
    problem = _ConstantProblem(20)
    cfg = ReaConfig(2)
    state = rea_init(Genome.zeros(20), problem, cfg)
    rng = make_rng(seed)
    seen = {state.best.genome}
    for _ in range(500):
        parent_count = state.evaluations
        rea_step(state, problem, cfg, rng)
        assert state.evaluations == parent_count + 1
        seen.add(state.best.genome)
    turnover = len(seen)
    return CheckResult(name, turnover > 50, f"{turnover} distinct best genomes in 500 steps")


def check_evaluation_accounting(seed: int) -> CheckResult:
    name = "algorithm: evaluations = 1 + loop iterations"
    counting = {"calls": 0}

    class Counted(LeadingOnes):
        def evaluate(self, x):
            counting["calls"] += 1
            return super().evaluate(x)

    rng = make_rng(seed)
    for budget in (1, 2, 10, 137):
        counting["calls"] = 0
        problem = Counted(Genome.ones(30))
        record = rea_run(Genome.zeros(30), problem, ReaConfig(2), RunBudget(budget, 30), rng.getrandbits(64))
        if record.evaluations_used != budget or counting["calls"] != budget:
            return CheckResult(name, False, f"budget {budget}: used {record.evaluations_used}, "
                                            f"calls {counting['calls']}")
    return CheckResult(name, True, "budgets 1, 2, 10, 137")


def _state_with(slots: dict, best: Genome, gamma: int, n: int) -> ReaState:
    x_old = slots[0]
    table = [None] * (gamma + 2)
    for i, g in slots.items():
        table[i] = Slot(g, 0)
    return ReaState(x_old, table, Slot(best, 1), 1, gamma, Direction.MAXIMIZE)


def check_selection_frequencies(seed: int, draws: int = 100_000, tol: float = 0.01) -> CheckResult:
    name = "algorithm: parent selection frequencies"
    n = 8
    x_old = Genome.zeros(n)
    best = Genome.ones(n)
    cases = [
        ("slots {0,3}", _state_with({0: x_old, 3: flip_bits(x_old, [0, 1, 2])}, best, 3, n),
         {x_old: 0.25, flip_bits(x_old, [0, 1, 2]): 0.25, best: 0.5}),
        ("gamma=1, slots {0,1,2}", _state_with(
            {0: x_old, 1: flip_bits(x_old, [0]), 2: flip_bits(x_old, [0, 1])}, best, 1, n),
         {x_old: 1 / 6, flip_bits(x_old, [0]): 1 / 6, flip_bits(x_old, [0, 1]): 1 / 6, best: 0.5}),
        ("only x* available", _state_with({0: x_old}, x_old, 2, n), {x_old: 1.0}),
    ]
    rng = make_rng(seed)
    worst = 0.0
    for label, state, expected in cases:
        counts = Counter(rea_select_parent(state, rng) for _ in range(draws))
        if set(counts) - set(expected):
            return CheckResult(name, False, f"{label}: unexpected parent")
        for g, p in expected.items():
            err = abs(counts[g] / draws - p)
            worst = max(worst, err)
            if err > tol:
                return CheckResult(name, False, f"{label}: {g} frequency off by {err:.4f}")
    return CheckResult(name, True, f"max deviation {worst:.4f} over {draws} draws")


def check_mutation_distribution(seed: int, draws: int = 1_000_000, tol: float = 0.01) -> CheckResult:
    name = "mutation: fraction of unchanged offspring"
    n = 64
    rng = make_rng(seed)
    x = Genome(n, rng.getrandbits(n))
    cfg = MutationConfig()
    same = sum(1 for _ in range(draws) if standard_bit_mutation(x, cfg, rng).bits == x.bits)
    expected = (1 - 1 / n) ** n
    frac = same / draws
    return CheckResult(name, abs(frac - expected) <= tol, f"{frac:.4f} vs {expected:.4f}")


ORACLE_CHECKS: list = [
    check_greedy_linear,
    check_mst_oracle,
    check_mst_components,
    check_leadingones_ball,
    check_linear_ball,
    check_penalty_dominance,
    check_addition_structure,
    check_removal_witness,
    check_perturbation_delta,
    check_neutral_bit,
]

INVARIANT_CHECKS: list = [
    check_slot_invariants,
    check_elitism,
    check_equal_acceptance,
    check_evaluation_accounting,
    check_selection_frequencies,
    check_mutation_distribution,
]


def run_checks(seed: int = 0, checks: Optional[list] = None,
               report: Optional[Callable[[CheckResult], None]] = None) -> list:
    results = []
    for k, check in enumerate(ORACLE_CHECKS + INVARIANT_CHECKS if checks is None else checks):
        try:
            result = check(seed + k)
        except Exception as exc:  # a crashing check is a failing check
            result = CheckResult(check.__name__, False, f"{type(exc).__name__}: {exc}")
        results.append(result)
        if report:
            report(result)
    return results
