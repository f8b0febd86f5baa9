import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from patternlab.cayley import (
    CayleySumGraph,
    clique_density,
    clique_free,
    clique_shift_witness,
    greedy_clique_free,
    odd_set,
    turan_experiment,
)
from patternlab.errors import CoprimalityError, DomainError
from patternlab.groups import GroupDescriptor
from patternlab.linear_systems import clique_system, is_translation_invariant


def brute(group, mask, r):
    n = group.order
    tuples = nondeg = 0
    for xs in itertools.product(range(n), repeat=r):
        if len(set(xs)) < r:
            continue
        sums = [int(group.add_idx(xs[i], xs[j])) for i, j in itertools.combinations(range(r), 2)]
        if all(mask[s] for s in sums):
            tuples += 1
            nondeg += len(set(sums)) == len(sums)
    return tuples, nondeg


def brute_t(group, mask, r):
    n = group.order
    hits = sum(
        all(mask[int(group.add_idx(xs[i], xs[j]))] for i, j in itertools.combinations(range(r), 2))
        for xs in itertools.product(range(n), repeat=r)
    )
    return Fraction(hits, n**r)


@given(st.integers(3, 13), st.integers(3, 4), st.integers(0, 2**32 - 1))
def test_clique_counts_match_brute_force(n, r, seed):
    g = GroupDescriptor.cyclic(n)
    mask = np.random.default_rng(seed).random(n) < 0.6
    res = clique_density(CayleySumGraph(g, mask), r)
    assert (res.clique_tuples, res.nondegenerate) == brute(g, mask, r)
    assert res.t_density == brute_t(g, mask, r)


def test_edges_and_loops():
    g = GroupDescriptor.cyclic(10)
    mask = np.zeros(10, dtype=bool)
    mask[[2, 3]] = True
    graph = CayleySumGraph(g, mask)
    adj = graph.adjacency()
    assert graph.loops == 2  # 2x = 2 has x in {1, 6}; 2x = 3 has none
    assert adj.sum() == graph.ordered_edges and np.array_equal(adj, adj.T) and not adj.diagonal().any()


@pytest.mark.parametrize("N", [2, 5, 50, 500])
def test_odd_set_in_even_cyclic_group(N):
    g = GroupDescriptor.cyclic(2 * N)
    graph = CayleySumGraph(g, odd_set(g))
    res = clique_density(graph, 3)
    assert res.nondegenerate == 0 and res.clique_tuples == 0
    assert abs(graph.edge_density - Fraction(1, 2)) <= Fraction(1, 2 * N)


def test_clique_system_ti_for_odd_orders():
    for n in range(3, 100, 2):
        g = GroupDescriptor.cyclic(n)
        assert is_translation_invariant(clique_system(3), g)
        s = n // 3
        c = clique_shift_witness(g, s)
        assert (2 * c) % n == s % n


def test_shift_witness_needs_odd_order():
    with pytest.raises(CoprimalityError):
        clique_shift_witness(GroupDescriptor.cyclic(10), 1)


def test_greedy_sets_are_clique_free():
    for n in (31, 101):
        g = GroupDescriptor.cyclic(n)
        A = greedy_clique_free(g, 3, seed=2)
        assert A.any() and clique_free(CayleySumGraph(g, A), 3)
    g = GroupDescriptor.cyclic(17)
    assert clique_free(CayleySumGraph(g, greedy_clique_free(g, 4, seed=0)), 4)


def test_turan_experiment_rows_and_strict_mode():
    rows = turan_experiment(["Z31", "Z101"], 3)
    assert all(r["clique_free"] and r["translation_invariant"] for r in rows)
    with pytest.raises(DomainError):
        turan_experiment(["Z30"], 3, strict=True)
    even = turan_experiment(["Z30"], 3, generator="odd")
    assert even[0]["clique_free"] and even[0]["edge_density"] > 0.5
