import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from reopt.bitstring import ContractViolation, Genome
from reopt.graphs import GraphInstance, random_connected_graph
from reopt.problems import (
    Direction,
    LeadingOnes,
    LinearConstrained,
    MstProblem,
    binval_weights,
    fitness_better_or_equal,
    format_graph,
    format_leadingones,
    format_linear,
    onemax_weights,
    parse_graph,
    parse_leadingones,
    parse_linear,
)

G = Genome.from_string
TRIANGLE = GraphInstance(3, ((0, 1, 1), (1, 2, 2), (0, 2, 3)))


def slow_leadingones(target, sigma, x):
    j = 0
    for pos in sigma:
        if x[pos] != target[pos]:
            break
        j += 1
    return j


class TestLeadingOnes:
    def test_examples(self):
        assert LeadingOnes(G("1111")).evaluate(G("1101")) == 2
        assert LeadingOnes(G("0110")).evaluate(G("0110")) == 4
        # order 3, 2 matches; position 1 mismatches
        assert LeadingOnes(G("1010"), (3, 2, 1, 0)).evaluate(G("1110")) == 2
        assert slow_leadingones(G("1010"), (3, 2, 1, 0), G("1110")) == 2

    def test_first_position_mismatch(self):
        assert LeadingOnes(G("1111")).evaluate(G("0111")) == 0

    def test_rejects_bad_permutation_and_length(self):
        with pytest.raises(ContractViolation):
            LeadingOnes(G("111"), (0, 0, 1))
        with pytest.raises(ContractViolation):
            LeadingOnes(G("111")).evaluate(G("11"))

    @given(st.data())
    def test_matches_scalar_loop(self, data):
        n = data.draw(st.integers(1, 40))
        target = Genome(n, data.draw(st.integers(0, (1 << n) - 1)))
        x = Genome(n, data.draw(st.integers(0, (1 << n) - 1)))
        sigma = data.draw(st.permutations(range(n)))
        assert LeadingOnes(target, sigma).evaluate(x) == slow_leadingones(target, sigma, x)
        assert LeadingOnes(target).evaluate(x) == slow_leadingones(target, range(n), x)

    @given(st.data())
    def test_relabelling_invariance(self, data):
        n = data.draw(st.integers(1, 30))
        target = Genome(n, data.draw(st.integers(0, (1 << n) - 1)))
        x = Genome(n, data.draw(st.integers(0, (1 << n) - 1)))
        sigma = data.draw(st.permutations(range(n)))
        # x agrees with z at sigma(k)  <=>  relabelled bit k is 1 against the all-ones target
        agree = Genome.from_bits(int(x[p] == target[p]) for p in sigma)
        assert LeadingOnes(target, sigma).evaluate(x) == LeadingOnes(Genome.ones(n)).evaluate(agree)


class TestLinear:
    def test_examples(self):
        inst = LinearConstrained((3, 1, 2), 1)
        assert inst.penalty == 10
        assert inst.evaluate(G("110")) == -6
        assert inst.evaluate(G("000")) == 0
        n = 10
        assert LinearConstrained(tuple(binval_weights(n)), n).evaluate(Genome.ones(n)) == 2 ** n - 1

    def test_binval_exact_at_62(self):
        inst = LinearConstrained(tuple(binval_weights(62)), 31)
        top = Genome.from_bits([1] * 31 + [0] * 31)
        assert inst.evaluate(top) == sum(1 << (61 - i) for i in range(31))
        assert isinstance(inst.evaluate(Genome.ones(62)), int)

    def test_with_bound_keeps_penalty(self):
        inst = LinearConstrained((3, 1, 2), 1)
        assert inst.with_bound(2).penalty == inst.penalty and inst.with_bound(2).bound == 2

    def test_bound_range(self):
        with pytest.raises(ContractViolation):
            LinearConstrained((1, 2), 3)

    @settings(max_examples=60)
    @given(st.lists(st.integers(-100, 100), min_size=1, max_size=9), st.data())
    def test_penalty_dominance(self, weights, data):
        n = len(weights)
        bound = data.draw(st.integers(0, n - 1))
        inst = LinearConstrained(tuple(weights), bound)
        under = data.draw(st.integers(0, bound))
        feasible = Genome.from_bits(data.draw(st.permutations([1] * under + [0] * (n - under))))
        over = data.draw(st.integers(bound + 1, n))
        infeasible = Genome.from_bits(data.draw(st.permutations([1] * over + [0] * (n - over))))
        assert inst.evaluate(feasible) > inst.evaluate(infeasible)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=30), st.data())
    def test_profit_matches_plain_sum(self, weights, data):
        n = len(weights)
        x = Genome(n, data.draw(st.integers(0, (1 << n) - 1)))
        inst = LinearConstrained(tuple(weights), n)
        assert math.isclose(inst.profit(x), sum(w for w, b in zip(weights, x) if b), abs_tol=1e-6)


class TestMst:
    def test_examples(self):
        assert MstProblem(TRIANGLE).evaluate(G("011")) == (1, 5)
        assert MstProblem(TRIANGLE).evaluate(G("110")) == (1, 3)
        four = GraphInstance(4, ((0, 1, 1), (1, 2, 1), (2, 3, 1)))
        assert MstProblem(four).evaluate(Genome.zeros(3)) == (4, 0)
        path = GraphInstance(3, ((0, 1, 5), (1, 2, 7)))
        assert MstProblem(path).evaluate(G("10")) == (2, 5)

    def test_all_ones_counts_graph_components(self):
        g = GraphInstance(5, ((0, 1, 1.0), (2, 3, 2.0)))
        assert MstProblem(g).evaluate(Genome.ones(2)) == (3, 3.0)

    def test_graph_validation(self):
        with pytest.raises(ContractViolation):
            GraphInstance(2, ((0, 0, 1),))
        with pytest.raises(ContractViolation):
            GraphInstance(2, ((0, 1, 0),))
        with pytest.raises(ContractViolation):
            GraphInstance(2, ((0, 1, 1), (1, 0, 2)))
        with pytest.raises(ContractViolation):
            GraphInstance(2, ((0, 2, 1),))

    @settings(max_examples=60)
    @given(st.integers(0, 2 ** 32), st.integers(2, 9))
    def test_components_match_bfs(self, seed, nodes):
        rng = random.Random(seed)
        m = rng.randint(nodes - 1, nodes * (nodes - 1) // 2)
        graph = random_connected_graph(nodes, m, rng)
        x = Genome(m, rng.getrandbits(m))
        adj = {v: set() for v in range(nodes)}
        for i in x.ones_positions():
            u, v, _ = graph.edges[i]
            adj[u].add(v)
            adj[v].add(u)
        seen, comps = set(), 0
        for s in range(nodes):
            if s not in seen:
                comps += 1
                stack = [s]
                while stack:
                    a = stack.pop()
                    if a not in seen:
                        seen.add(a)
                        stack.extend(adj[a] - seen)
        c, w = MstProblem(graph).evaluate(x)
        assert c == comps and 1 <= c <= nodes
        assert math.isclose(w, sum(graph.edges[i][2] for i in x.ones_positions()))


class TestCompare:
    def test_examples(self):
        assert fitness_better_or_equal(Direction.MINIMIZE, (1, 10), (2, 1))
        assert fitness_better_or_equal(Direction.MAXIMIZE, 5, 5)
        assert not fitness_better_or_equal(Direction.MINIMIZE, (1, 4), (1, 3))

    def test_shape_mismatch(self):
        with pytest.raises(ContractViolation):
            fitness_better_or_equal(Direction.MINIMIZE, (1, 2), 3)

    def test_sentinels(self):
        assert fitness_better_or_equal(Direction.MAXIMIZE, -10 ** 9, -math.inf)
        assert fitness_better_or_equal(Direction.MINIMIZE, (40, 1e9), (math.inf, math.inf))


class TestTextFormats:
    def test_leadingones_round_trip(self):
        p = parse_leadingones("# target\n1010\n3 2 1 0\n")
        assert p.sigma == (3, 2, 1, 0) and str(p.target) == "1010"
        assert parse_leadingones(format_leadingones(p)).sigma == p.sigma

    def test_leadingones_bad_permutation(self):
        with pytest.raises(ContractViolation, match="line 2"):
            parse_leadingones("101\n0 x 2\n")

    def test_linear_shorthands(self):
        p = parse_linear("n 6\nbound 3\nweights binval\n")
        assert p.weights == (32, 16, 8, 4, 2, 1)
        assert parse_linear("n 3\nbound 1\nweights onemax").weights == (1, 1, 1)
        q = parse_linear("n 3\nbound 1\nweights 3 1 2.5\npenalty 99\n")
        assert q.weights == (3, 1, 2.5) and q.penalty == 99
        for inst in (p, q):
            again = parse_linear(format_linear(inst))
            assert (again.weights, again.bound, again.penalty) == (inst.weights, inst.bound, inst.penalty)

    def test_linear_errors(self):
        with pytest.raises(ContractViolation, match="line 3"):
            parse_linear("n 3\nbound 1\nweights 1 2\n")
        with pytest.raises(ContractViolation, match="bound"):
            parse_linear("n 3\nweights onemax\n")

    def test_graph_round_trip(self):
        g = parse_graph("nodes 3\n0 1 1\n1 2 2.5\n")
        assert g.edges == ((0, 1, 1), (1, 2, 2.5))
        assert parse_graph(format_graph(g)) == g

    def test_graph_errors(self):
        with pytest.raises(ContractViolation, match="nodes"):
            parse_graph("0 1 1\n")
        with pytest.raises(ContractViolation, match="line 2"):
            parse_graph("nodes 3\n0 1\n")

    def test_onemax_weights(self):
        assert onemax_weights(3) == [1, 1, 1]
