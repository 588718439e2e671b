"""Exact reference computations the experiments are checked against."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

from .bitstring import ContractViolation, Genome, flip_bits
from .graphs import GraphInstance, UnionFind, count_components
from .problems import Direction, FitnessValue, LeadingOnes, LinearConstrained

__all__ = [
    "BallOptimum",
    "MstResult",
    "NeutralBitModel",
    "OracleRefusal",
    "ball_optimum",
    "greedy_linear_optimum",
    "lemma_hami_witness",
    "leadingones_ball_value",
    "linear_ball_value",
    "mst_oracle",
    "mst_removal_witness",
    "neutral_bit_probability",
]

FULL_SPACE_LIMIT = 24
COMBINATION_RADIUS_LIMIT = 3


class OracleRefusal(ContractViolation):
    """The oracle cannot answer exactly within its documented limits."""


class BallOptimum(NamedTuple):
    radius: int
    best_value: FitnessValue
    witness: Genome


class MstResult(NamedTuple):
    edge_ids: frozenset
    weight: float
    components: int


@dataclass(frozen=True)
class NeutralBitModel:
    n: int
    t: int


def ball_optimum(problem, anchor: Genome, radius: int) -> BallOptimum:
    """Best value over ``{y : H(y, anchor) <= radius}`` by exhaustive enumeration.

    Ties go to the lexicographically smallest sorted flip set.
    """
    n = anchor.n
    radius = min(radius, n)
    if radius < 0:
        raise ContractViolation("radius must be non-negative")
    if n > FULL_SPACE_LIMIT and radius > COMBINATION_RADIUS_LIMIT:
        raise OracleRefusal(
            f"ball enumeration limited to n <= {FULL_SPACE_LIMIT} or radius <= "
            f"{COMBINATION_RADIUS_LIMIT} (got n={n}, radius={radius})"
        )
    maximize = problem.direction is Direction.MAXIMIZE
    best_key = best_flips = best_value = None
    for k in range(radius + 1):
        for flips in combinations(range(n), k):
            value = problem.evaluate(flip_bits(anchor, flips))
            if best_value is None:
                better = True
            elif value == best_value:
                better = flips < best_key
            else:
                better = value > best_value if maximize else value < best_value
            if better:
                best_key, best_flips, best_value = flips, flips, value
    return BallOptimum(radius, best_value, flip_bits(anchor, best_flips))


def leadingones_ball_value(problem: LeadingOnes, anchor: Genome, radius: int) -> int:
    """Closed form: repair the first ``radius`` sigma-ordered mismatches."""
    diff = anchor.bits ^ problem.target.bits
    seen = 0
    for j, pos in enumerate(problem.sigma):
        if (diff >> pos) & 1:
            if seen == radius:
                return j
            seen += 1
    return problem.n


def greedy_linear_optimum(inst: LinearConstrained) -> tuple:
    """The ``bound`` heaviest items, ties to the lower index."""
    if any(w < 0 for w in inst.weights):
        raise OracleRefusal("greedy optimum is only exact for non-negative weights")
    order = sorted(range(inst.n), key=lambda i: (-inst.weights[i], i))
    genome = flip_bits(Genome.zeros(inst.n), order[:inst.bound])
    return genome, inst.evaluate(genome)


def linear_ball_value(inst: LinearConstrained, anchor: Genome, radius: int):
    """Best penalty fitness within Hamming distance ``radius`` of ``anchor``.

    For a fixed number of additions and removals the cardinality, hence the
    penalty, is fixed, so the heaviest additions and lightest removals win;
    enumerating all (add, remove) splits gives the exact optimum.
    """
    if any(w < 0 for w in inst.weights):
        raise OracleRefusal("ball formula is only exact for non-negative weights")
    ones = sorted((inst.weights[i] for i in range(inst.n) if anchor[i]))
    zeros = sorted((inst.weights[i] for i in range(inst.n) if not anchor[i]), reverse=True)
    base_profit = inst.profit(anchor)
    base_count = len(ones)
    best = None
    for add in range(min(radius, len(zeros)) + 1):
        gained = sum(zeros[:add])
        for rem in range(min(radius - add, len(ones)) + 1):
            profit = base_profit + gained - sum(ones[:rem])
            excess = base_count + add - rem - inst.bound
            value = profit - inst.penalty * excess if excess > 0 else profit
            if best is None or value > best:
                best = value
    return best


def mst_oracle(graph: GraphInstance) -> MstResult:
    """Kruskal; equal weights are taken in edge-id order."""
    uf = UnionFind(graph.nodes)
    chosen = []
    total = 0
    for i in sorted(range(graph.m), key=lambda i: (graph.edges[i][2], i)):
        u, v, w = graph.edges[i]
        if uf.union(u, v):
            chosen.append(i)
            total += w
    return MstResult(frozenset(chosen), total, uf.components)


def neutral_bit_probability(model: NeutralBitModel) -> float:
    """Probability that a bit flipped independently w.p. 1/n per step is back at its start after t steps."""
    if model.n < 2:
        raise ContractViolation("the neutral-bit formula needs n >= 2")
    if model.t < 0:
        raise ContractViolation("t must be non-negative")
    return 0.5 + 0.5 * (1.0 - 2.0 / model.n) ** model.t


def _selected(genome: Genome) -> list:
    return genome.ones_positions()


def lemma_hami_witness(x_old: Genome, new_graph: GraphInstance, i: int) -> Genome:
    """Best connected selection at distance exactly ``i`` from an edge-addition anchor.

    Repeatedly drops the heaviest selected edge whose removal keeps the graph
    connected (lowest id first among equal weights).
    """
    if x_old.n != new_graph.m:
        raise ContractViolation("anchor length does not match the edge count")
    if i < 0:
        raise ContractViolation("distance must be non-negative")
    selected = set(_selected(x_old))
    if count_components(new_graph.nodes, (new_graph.edges[e] for e in selected)) != 1:
        raise OracleRefusal("anchor selection is not connected")
    for step in range(i):
        order = sorted(selected, key=lambda e: (-new_graph.edges[e][2], e))
        for e in order:
            rest = selected - {e}
            if count_components(new_graph.nodes, (new_graph.edges[k] for k in rest)) == 1:
                selected = rest
                break
        else:
            raise OracleRefusal(f"no connected solution by removal at distance {step + 1}")
    return flip_bits(Genome.zeros(x_old.n), selected)


def mst_removal_witness(x_old: Genome, new_graph: GraphInstance, i: int) -> Genome:
    """Best selection within distance ``i`` of a spanning-forest anchor.

    Adds, Kruskal style, the ``i`` lightest edges that each merge two forest
    components; this is the lexicographic optimum of the radius-``i`` ball
    when the anchor is a minimum spanning forest.
    """
    if x_old.n != new_graph.m:
        raise ContractViolation("anchor length does not match the edge count")
    uf = UnionFind(new_graph.nodes)
    selected = set(_selected(x_old))
    for e in selected:
        u, v, _ = new_graph.edges[e]
        uf.union(u, v)
    added = 0
    for e in sorted(range(new_graph.m), key=lambda e: (new_graph.edges[e][2], e)):
        if added == i:
            break
        if e in selected:
            continue
        u, v, _ = new_graph.edges[e]
        if uf.union(u, v):
            selected.add(e)
            added += 1
    return flip_bits(Genome.zeros(x_old.n), selected)

