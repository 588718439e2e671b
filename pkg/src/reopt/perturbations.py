"""Builders for (old instance, new instance, x_old, delta) re-optimization tasks."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .bitstring import ContractViolation, Genome, flip_bits
from .graphs import GraphInstance, UnionFind
from .oracles import greedy_linear_optimum, linear_ball_value, mst_oracle
from .problems import FitnessValue, LeadingOnes, LinearConstrained, MstProblem

__all__ = [
    "PerturbationKind",
    "PerturbationSpec",
    "ReoptInstance",
    "make_leadingones_reopt",
    "make_linear_reopt",
    "make_mst_addition_reopt",
    "make_mst_removal_reopt",
]


class PerturbationKind(enum.Enum):
    TARGET_FLIP = "target_flip"
    BOUND_SHIFT = "bound_shift"
    EDGE_ADDITION = "edge_addition"
    EDGE_REMOVAL = "edge_removal"


@dataclass(frozen=True)
class PerturbationSpec:
    """Declarative description of an instance change.

    Only the fields relevant to ``kind`` are read: ``positions``/``variant``
    for target flips, ``sign`` for bound shifts, ``edges`` for additions and
    ``edge_ids``/``selection`` for removals.  ``delta`` is the declared size;
    explicit ``positions``, ``edges`` or ``edge_ids`` override it.
    """

    kind: PerturbationKind
    delta: int = 1
    variant: str = "adversarial_prefix"
    positions: Optional[tuple] = None
    window: float = 0.5
    sign: int = 1
    edges: Optional[tuple] = None
    edge_ids: Optional[tuple] = None
    selection: str = "tree"

    def __post_init__(self):
        if not isinstance(self.kind, PerturbationKind):
            object.__setattr__(self, "kind", PerturbationKind(self.kind))
        if self.positions is not None:
            object.__setattr__(self, "delta", len(self.positions))
        if self.edges is not None:
            object.__setattr__(self, "delta", len(self.edges))
        if self.edge_ids is not None:
            object.__setattr__(self, "delta", len(self.edge_ids))
        if self.delta < 1:
            raise ContractViolation("a perturbation needs delta >= 1")
        if self.kind is PerturbationKind.BOUND_SHIFT and self.sign not in (1, -1):
            raise ContractViolation(f"sign must be +1 or -1, got {self.sign}")
        if self.variant not in ("adversarial_prefix", "random_neighbor"):
            raise ContractViolation(f"unknown variant {self.variant!r}")
        if self.selection not in ("tree", "random"):
            raise ContractViolation(f"unknown removal selection {self.selection!r}")


@dataclass
class ReoptInstance:
    old_problem: object
    new_problem: object
    x_old: Genome
    target_quality: FitnessValue
    delta_true: int
    old_solution: Genome
    extras: dict = field(default_factory=dict)


def make_leadingones_reopt(
    n: int,
    sigma: Optional[Sequence[int]] = None,
    flip_positions: Sequence[int] = (),
    variant: str = "random_neighbor",
    delta: Optional[int] = None,
) -> ReoptInstance:
    """Old target ``z = x_old``; the new target flips ``flip_positions`` of it.

    ``adversarial_prefix`` ignores ``flip_positions``: ``x_old`` gets its first
    ``delta`` sigma-ordered bits wrong and the new target is all ones.
    """
    order = tuple(range(n)) if sigma is None else tuple(sigma)
    if variant == "adversarial_prefix":
        if delta is None or not 1 <= delta <= n:
            raise ContractViolation(f"adversarial prefix needs 1 <= delta <= n, got {delta}")
        new_target = Genome.ones(n)
        x_old = flip_bits(new_target, order[:delta])
    elif variant == "random_neighbor":
        positions = sorted(set(flip_positions))
        if not positions:
            raise ContractViolation("at least one target position must flip")
        if len(positions) != len(list(flip_positions)):
            raise ContractViolation("flip positions must be distinct")
        x_old = Genome.ones(n)
        new_target = flip_bits(x_old, positions)
    else:
        raise ContractViolation(f"unknown variant {variant!r}")
    old = LeadingOnes(x_old, order)
    new = LeadingOnes(new_target, order)
    return ReoptInstance(
        old_problem=old,
        new_problem=new,
        x_old=x_old,
        target_quality=n,
        delta_true=(x_old.bits ^ new_target.bits).bit_count(),
        old_solution=x_old,
    )


def make_linear_reopt(weights: Sequence, b_old: int, delta: int, sign: int) -> ReoptInstance:
    n = len(weights)
    if sign not in (1, -1):
        raise ContractViolation(f"sign must be +1 or -1, got {sign}")
    if not 1 <= delta <= min(b_old, n - b_old):
        raise ContractViolation(
            f"need 1 <= delta <= min(B_old, n - B_old) = {min(b_old, n - b_old)}, got {delta}"
        )
    if any(w < 0 for w in weights):
        raise ContractViolation("the standard generator needs non-negative weights")
    old = LinearConstrained(tuple(weights), b_old)
    x_old, _ = greedy_linear_optimum(old)
    new = old.with_bound(b_old + sign * delta)
    _, target = greedy_linear_optimum(new)
    radius = next(i for i in range(n + 1) if linear_ball_value(new, x_old, i) >= target)
    return ReoptInstance(old, new, x_old, target, radius, x_old)


def _mst_genome(graph: GraphInstance) -> Genome:
    return flip_bits(Genome.zeros(graph.m), mst_oracle(graph).edge_ids)


def make_mst_addition_reopt(graph: GraphInstance, new_edges: Sequence) -> ReoptInstance:
    """Append ``new_edges``; ``x_old`` is the old MST with every new edge switched on."""
    if not new_edges:
        raise ContractViolation("at least one edge must be added")
    if not graph.is_connected():
        raise ContractViolation("old graph must be connected")
    keys = graph.edge_keys()
    for u, v, _ in new_edges:
        key = (min(u, v), max(u, v))
        if key in keys:
            raise ContractViolation(f"edge {key} already exists")
        keys.add(key)
    new_graph = GraphInstance.build(graph.nodes, list(graph.edges) + list(new_edges))
    old_solution = _mst_genome(graph)
    delta = len(new_edges)
    x_old = Genome(new_graph.m, old_solution.bits | (((1 << delta) - 1) << graph.m))
    new_problem = MstProblem(new_graph)
    # evaluate rather than reuse the oracle's sum: float addition order must match
    target = new_problem.evaluate(_mst_genome(new_graph))
    return ReoptInstance(
        MstProblem(graph), new_problem, x_old, target, delta, old_solution,
        extras={"added_ids": tuple(range(graph.m, new_graph.m))},
    )


def _violated_cut(graph: GraphInstance, keep: list, removed: list) -> str:
    uf = UnionFind(graph.nodes)
    for i in keep:
        u, v, _ = graph.edges[i]
        uf.union(u, v)
    root = uf.find(0)
    side = sorted(x for x in range(graph.nodes) if uf.find(x) == root)
    inside = set(side)
    crossing = [i for i in removed if (graph.edges[i][0] in inside) != (graph.edges[i][1] in inside)]
    return f"nodes {side} are cut off from the rest; removed edges crossing the cut: {crossing}"


def make_mst_removal_reopt(graph: GraphInstance, removed_edge_ids: Sequence[int]) -> ReoptInstance:
    """Drop edges (surviving order kept); ``x_old`` is the truncated old MST."""
    removed = sorted(set(removed_edge_ids))
    if not removed:
        raise ContractViolation("at least one edge must be removed")
    if any(not 0 <= i < graph.m for i in removed):
        raise ContractViolation("removed edge id out of range")
    keep = [i for i in range(graph.m) if i not in set(removed)]
    if not graph.is_connected(keep):
        raise ContractViolation("removal disconnects the graph: " + _violated_cut(graph, keep, removed))
    new_graph = GraphInstance(graph.nodes, tuple(graph.edges[i] for i in keep))
    old_solution = _mst_genome(graph)
    x_old = Genome.from_bits(old_solution[i] for i in keep)
    delta_true = sum(old_solution[i] for i in removed)
    new_problem = MstProblem(new_graph)
    target = new_problem.evaluate(_mst_genome(new_graph))
    return ReoptInstance(
        MstProblem(graph), new_problem, x_old, target, delta_true, old_solution,
        extras={"removed_ids": tuple(removed), "declared_delta": len(removed)},
    )
