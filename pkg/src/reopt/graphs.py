"""Undirected weighted graphs, union-find, and the random instance generator."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .bitstring import ContractViolation

__all__ = [
    "Edge",
    "GraphInstance",
    "UnionFind",
    "count_components",
    "random_connected_graph",
    "random_new_edges",
]

Edge = tuple  # (u, v, weight)


class UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))
        self.components = size

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        self.components -= 1
        return True


@dataclass(frozen=True)
class GraphInstance:
    """Node count plus an ordered edge list; edge ``i`` is genome position ``i``."""

    nodes: int
    edges: tuple

    def __post_init__(self):
        if self.nodes < 1:
            raise ContractViolation("graph needs at least one node")
        seen = set()
        for i, (u, v, w) in enumerate(self.edges):
            if not (0 <= u < self.nodes and 0 <= v < self.nodes):
                raise ContractViolation(f"edge {i} ({u}, {v}) references a missing node")
            if u == v:
                raise ContractViolation(f"edge {i} is a self-loop on node {u}")
            if not w > 0:
                raise ContractViolation(f"edge {i} has non-positive weight {w}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ContractViolation(f"duplicate edge {key}")
            seen.add(key)

    @classmethod
    def build(cls, nodes: int, edges: Iterable[Sequence]) -> "GraphInstance":
        return cls(nodes, tuple((int(u), int(v), w) for u, v, w in edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    def edge_keys(self) -> set:
        return {(min(u, v), max(u, v)) for u, v, _ in self.edges}

    def weights(self) -> list:
        return [w for _, _, w in self.edges]

    def is_connected(self, edge_ids: Iterable[int] | None = None) -> bool:
        ids = range(self.m) if edge_ids is None else edge_ids
        return count_components(self.nodes, (self.edges[i] for i in ids)) == 1


def count_components(nodes: int, edges: Iterable[Sequence]) -> int:
    uf = UnionFind(nodes)
    for u, v, *_ in edges:
        uf.union(u, v)
    return uf.components


def _fresh_weight(rng: random.Random, used: set, low: float, high: float) -> float:
    while True:
        w = rng.uniform(low, high)
        if w not in used:
            used.add(w)
            return w


def random_connected_graph(
    nodes: int,
    edges: int,
    rng: random.Random,
    low: float = 1.0,
    high: float = 1000.0,
) -> GraphInstance:
    """Random spanning tree plus extra random edges, pairwise distinct weights."""
    max_edges = nodes * (nodes - 1) // 2
    if nodes < 2 or not nodes - 1 <= edges <= max_edges:
        raise ContractViolation(
            f"cannot build a connected simple graph with {nodes} nodes and {edges} edges"
        )
    order = list(range(nodes))
    rng.shuffle(order)
    pairs = []
    keys = set()
    for k in range(1, nodes):
        u, v = order[k], order[rng.randrange(k)]
        pairs.append((u, v))
        keys.add((min(u, v), max(u, v)))
    while len(pairs) < edges:
        u, v = rng.randrange(nodes), rng.randrange(nodes)
        key = (min(u, v), max(u, v))
        if u == v or key in keys:
            continue
        keys.add(key)
        pairs.append((u, v))
    rng.shuffle(pairs)
    used: set = set()
    return GraphInstance(nodes, tuple((u, v, _fresh_weight(rng, used, low, high)) for u, v in pairs))


def random_new_edges(
    graph: GraphInstance,
    count: int,
    rng: random.Random,
    low: float = 1.0,
    high: float = 1000.0,
) -> list:
    """``count`` node pairs absent from ``graph`` with weights distinct from all existing ones."""
    keys = graph.edge_keys()
    if len(keys) + count > graph.nodes * (graph.nodes - 1) // 2:
        raise ContractViolation("graph is too dense to add that many edges")
    used = set(graph.weights())
    out = []
    while len(out) < count:
        u, v = rng.randrange(graph.nodes), rng.randrange(graph.nodes)
        key = (min(u, v), max(u, v))
        if u == v or key in keys:
            continue
        keys.add(key)
        out.append((u, v, _fresh_weight(rng, used, low, high)))
    return out
