"""The three benchmark families behind one evaluator interface.

Every problem exposes ``n`` (genome length), ``direction``, ``worst`` (the
sentinel fitness of an empty slot) and ``evaluate(genome)``.  Fitness values
are plain Python numbers, or ``(components, weight)`` tuples for the MST
problem; tuples already compare lexicographically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from numbers import Real
from typing import Optional, Sequence, Union

from .bitstring import ContractViolation, Genome
from .graphs import GraphInstance

__all__ = [
    "Direction",
    "FitnessValue",
    "LeadingOnes",
    "LinearConstrained",
    "MstProblem",
    "fitness_better_or_equal",
    "binval_weights",
    "onemax_weights",
    "parse_leadingones",
    "parse_linear",
    "parse_graph",
    "format_leadingones",
    "format_linear",
    "format_graph",
]

FitnessValue = Union[int, float, tuple]


class Direction(enum.Enum):
    MAXIMIZE = "max"
    MINIMIZE = "min"


def _same_shape(a, b) -> bool:
    if isinstance(a, tuple) or isinstance(b, tuple):
        return isinstance(a, tuple) and isinstance(b, tuple) and len(a) == len(b)
    return isinstance(a, Real) and isinstance(b, Real)


def fitness_better_or_equal(direction: Direction, a: FitnessValue, b: FitnessValue) -> bool:
    """``a >= b`` when maximizing, ``a <= b`` when minimizing (lexicographic on pairs)."""
    if not _same_shape(a, b):
        raise ContractViolation(f"cannot compare fitness values {a!r} and {b!r}")
    return a >= b if direction is Direction.MAXIMIZE else a <= b


class _ChunkedSum:
    """Weighted bit sums through per-byte lookup tables.

    Summation order is fixed, so float results are deterministic; integer
    weights stay exact.
    """

    def __init__(self, weights: Sequence):
        self.n = len(weights)
        self.nbytes = (self.n + 7) // 8
        zero = 0 if all(isinstance(w, int) for w in weights) else 0.0
        tables = []
        for start in range(0, self.n, 8):
            chunk = list(weights[start:start + 8])
            table = [zero] * 256
            for b in range(1, 256):
                low = b & -b
                j = low.bit_length() - 1
                table[b] = table[b ^ low] + (chunk[j] if j < len(chunk) else zero)
            tables.append(table)
        self.tables = tables
        self.zero = zero

    def __call__(self, bits: int):
        total = self.zero
        for table, byte in zip(self.tables, bits.to_bytes(self.nbytes, "little")):
            if byte:
                total += table[byte]
        return total


@dataclass(frozen=True, eq=False)
class LeadingOnes:
    """Generalized LeadingOnes: length of the sigma-ordered prefix agreeing with ``target``."""

    target: Genome
    sigma: tuple = None
    direction: Direction = field(default=Direction.MAXIMIZE, init=False)

    def __post_init__(self):
        n = self.target.n
        sigma = tuple(range(n)) if self.sigma is None else tuple(int(s) for s in self.sigma)
        if sorted(sigma) != list(range(n)):
            raise ContractViolation("sigma is not a permutation of 0..n-1")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "_identity", sigma == tuple(range(n)))

    @property
    def n(self) -> int:
        return self.target.n

    @property
    def worst(self):
        return -math.inf

    @property
    def optimum_value(self) -> int:
        return self.target.n

    def evaluate(self, x: Genome) -> int:
        if x.n != self.target.n:
            raise ContractViolation(f"genome length {x.n} != {self.target.n}")
        diff = x.bits ^ self.target.bits
        if not diff:
            return x.n
        if self._identity:
            return (diff & -diff).bit_length() - 1
        for j, pos in enumerate(self.sigma):
            if (diff >> pos) & 1:
                return j
        return x.n  # unreachable: diff != 0


def onemax_weights(n: int) -> list:
    return [1] * n


def binval_weights(n: int) -> list:
    return [1 << (n - 1 - i) for i in range(n)]


@dataclass(frozen=True, eq=False)
class LinearConstrained:
    """Linear profit under a cardinality bound, with the penalty ``C * max(|x| - B, 0)``.

    ``penalty=None`` selects ``C = n * max|w_i| + 1``.
    """

    weights: tuple
    bound: int
    penalty: Optional[Real] = None
    direction: Direction = field(default=Direction.MAXIMIZE, init=False)

    def __post_init__(self):
        weights = tuple(self.weights)
        n = len(weights)
        if n < 1:
            raise ContractViolation("need at least one weight")
        if not 0 <= self.bound <= n:
            raise ContractViolation(f"bound {self.bound} outside [0, {n}]")
        object.__setattr__(self, "weights", weights)
        if self.penalty is None:
            object.__setattr__(self, "penalty", n * max(abs(w) for w in weights) + 1)
        object.__setattr__(self, "_profit", _ChunkedSum(weights))

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def worst(self):
        return -math.inf

    def with_bound(self, bound: int) -> "LinearConstrained":
        """Same profits and penalty constant, new bound."""
        return LinearConstrained(self.weights, bound, self.penalty)

    def profit(self, x: Genome):
        return self._profit(x.bits)

    def evaluate(self, x: Genome):
        if x.n != len(self.weights):
            raise ContractViolation(f"genome length {x.n} != {len(self.weights)}")
        excess = x.bits.bit_count() - self.bound
        p = self._profit(x.bits)
        return p - self.penalty * excess if excess > 0 else p


@dataclass(frozen=True, eq=False)
class MstProblem:
    """Minimize ``(components, selected weight)`` over edge selections of ``graph``."""

    graph: GraphInstance
    direction: Direction = field(default=Direction.MINIMIZE, init=False)

    def __post_init__(self):
        object.__setattr__(self, "_u", tuple(e[0] for e in self.graph.edges))
        object.__setattr__(self, "_v", tuple(e[1] for e in self.graph.edges))
        object.__setattr__(self, "_weight", _ChunkedSum(self.graph.weights()))

    @property
    def n(self) -> int:
        return self.graph.m

    @property
    def worst(self):
        return (math.inf, math.inf)

    def components(self, x: Genome) -> int:
        bits = x.bits
        parent = list(range(self.graph.nodes))
        comps = self.graph.nodes
        us, vs = self._u, self._v
        while bits:
            low = bits & -bits
            e = low.bit_length() - 1
            bits ^= low
            a = us[e]
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            b = vs[e]
            while parent[b] != b:
                parent[b] = parent[parent[b]]
                b = parent[b]
            if a != b:
                parent[b] = a
                comps -= 1
        return comps

    def weight(self, x: Genome):
        return self._weight(x.bits)

    def evaluate(self, x: Genome) -> tuple:
        if x.n != self.graph.m:
            raise ContractViolation(f"genome length {x.n} != edge count {self.graph.m}")
        return (self.components(x), self._weight(x.bits))


# -- instance text formats -------------------------------------------------

def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def parse_leadingones(text: str) -> LeadingOnes:
    """Target bit string on the first line, optional 0-based permutation on the second."""
    lines = list(_content_lines(text))
    if not lines or len(lines) > 2:
        raise ContractViolation("leadingones file needs a target line and an optional permutation line")
    target = Genome.from_string(lines[0][1])
    sigma = None
    if len(lines) == 2:
        lineno, line = lines[1]
        try:
            sigma = [int(tok) for tok in line.split()]
        except ValueError as exc:
            raise ContractViolation(f"line {lineno}: bad permutation: {exc}") from None
    return LeadingOnes(target, sigma)


def format_leadingones(problem: LeadingOnes) -> str:
    out = f"{problem.target}\n"
    if problem.sigma != tuple(range(problem.n)):
        out += " ".join(map(str, problem.sigma)) + "\n"
    return out


def _number(tok: str):
    try:
        return int(tok)
    except ValueError:
        return float(tok)


def parse_linear(text: str) -> LinearConstrained:
    """Keyed lines ``n <int>``, ``bound <int>``, ``weights <list | binval | onemax>``."""
    fields = {}
    for lineno, line in _content_lines(text):
        key, _, rest = line.partition(" ")
        if key not in ("n", "bound", "weights", "penalty"):
            raise ContractViolation(f"line {lineno}: unknown key {key!r}")
        fields[key] = (lineno, rest.strip())
    for key in ("n", "bound", "weights"):
        if key not in fields:
            raise ContractViolation(f"linear instance is missing the {key!r} line")
    try:
        n = int(fields["n"][1])
        bound = int(fields["bound"][1])
    except ValueError as exc:
        raise ContractViolation(f"bad integer: {exc}") from None
    lineno, spec = fields["weights"]
    if spec == "binval":
        weights = binval_weights(n)
    elif spec == "onemax":
        weights = onemax_weights(n)
    else:
        try:
            weights = [_number(tok) for tok in spec.split()]
        except ValueError as exc:
            raise ContractViolation(f"line {lineno}: bad weight: {exc}") from None
        if len(weights) != n:
            raise ContractViolation(f"line {lineno}: expected {n} weights, got {len(weights)}")
    penalty = _number(fields["penalty"][1]) if "penalty" in fields else None
    return LinearConstrained(tuple(weights), bound, penalty)


def format_linear(problem: LinearConstrained) -> str:
    n = problem.n
    if list(problem.weights) == binval_weights(n):
        spec = "binval"
    elif list(problem.weights) == onemax_weights(n):
        spec = "onemax"
    else:
        spec = " ".join(repr(w) for w in problem.weights)
    out = f"n {n}\nbound {problem.bound}\nweights {spec}\n"
    if problem.penalty != n * max(abs(w) for w in problem.weights) + 1:
        out += f"penalty {problem.penalty!r}\n"
    return out


def parse_graph(text: str) -> GraphInstance:
    """Header ``nodes <nv>`` followed by ``u v weight`` lines."""
    lines = list(_content_lines(text))
    if not lines or not lines[0][1].startswith("nodes"):
        raise ContractViolation("graph file must start with 'nodes <count>'")
    try:
        nodes = int(lines[0][1].split()[1])
    except (IndexError, ValueError):
        raise ContractViolation(f"line {lines[0][0]}: bad node header") from None
    edges = []
    for lineno, line in lines[1:]:
        toks = line.split()
        if len(toks) != 3:
            raise ContractViolation(f"line {lineno}: expected 'u v weight'")
        try:
            edges.append((int(toks[0]), int(toks[1]), _number(toks[2])))
        except ValueError as exc:
            raise ContractViolation(f"line {lineno}: {exc}") from None
    return GraphInstance.build(nodes, edges)


def format_graph(graph: GraphInstance) -> str:
    lines = [f"nodes {graph.nodes}"]
    lines += [f"{u} {v} {w!r}" for u, v, w in graph.edges]
    return "\n".join(lines) + "\n"
