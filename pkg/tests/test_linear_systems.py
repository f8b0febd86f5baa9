import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import nested_loop_count
from patternlab.errors import DomainError, StructuralError
from patternlab.groups import GroupDescriptor
from patternlab.linear_systems import (
    LinearSystem,
    OrientedGraph,
    ap3_binary,
    ap_system,
    clique_system,
    count_brute,
    count_eliminate,
    cs_complexity,
    degeneracy_ordering,
    function_pattern_average,
    is_binary,
    is_translation_invariant,
    nondegenerate_search,
    pattern_count,
    pattern_density,
    translation_closure,
    true_complexity,
    underlying_graph,
)
from patternlab.modlinalg import rank_mod, smith_normal_form, solve_congruence


@st.composite
def binary_instances(draw, max_d=4, max_order=24):
    d = draw(st.integers(2, max_d))
    n = draw(st.integers(2, max_order))
    pairs = list(itertools.combinations(range(d), 2))
    edges = draw(st.lists(st.sampled_from(pairs), min_size=1, max_size=min(4, len(pairs)), unique=True))
    rows = []
    for a, b in edges:
        row = [0] * d
        row[a] = draw(st.integers(1, n - 1) if n > 2 else st.just(1))
        row[b] = draw(st.integers(1, n - 1) if n > 2 else st.just(1))
        rows.append(row)
    if len({tuple(r) for r in rows}) != len(rows):
        rows = [rows[0]]
    g = GroupDescriptor.cyclic(n)
    seed = draw(st.integers(0, 2**32 - 1))
    mask = np.random.default_rng(seed).random(n) < draw(st.floats(0.1, 0.9))
    return LinearSystem.from_rows(rows), g, mask


def test_trivial_counts():
    g = GroupDescriptor.cyclic(13)
    full = np.ones(13, dtype=bool)
    assert pattern_density(ap_system(3), g, full) == 1
    assert pattern_count(ap_system(3), g, np.zeros(13, dtype=bool)) == 0


def test_three_ap_count_in_small_group():
    g = GroupDescriptor.cyclic(7)
    A = np.zeros(7, dtype=bool)
    A[[0, 1, 2]] = True
    # (x, x+y, x+2y) all in {0,1,2}: the 3 trivial ones plus (0,1,2) and (2,1,0)
    assert pattern_count(ap_system(3), g, A) == 5


@given(binary_instances())
def test_elimination_matches_nested_loops(inst):
    sys, g, mask = inst
    assert count_eliminate(sys, g, mask) == nested_loop_count(sys.rows(), g, mask)


@given(binary_instances(max_d=3, max_order=12))
def test_enumeration_matches_nested_loops(inst):
    sys, g, mask = inst
    assert count_brute(sys, g, mask) == nested_loop_count(sys.rows(), g, mask)


def test_product_group_counts():
    g = GroupDescriptor.parse("Z2xZ3")
    mask = np.array([1, 0, 1, 1, 0, 1], dtype=bool)
    sys = ap_system(3)
    assert pattern_count(sys, g, mask, "enumerate") == nested_loop_count(sys.rows(), g, mask)


def test_thread_count_does_not_change_result(rng):
    g = GroupDescriptor.cyclic(31)
    mask = rng.random(31) < 0.5
    sys = ap_system(4)
    assert count_brute(sys, g, mask, threads=1) == count_brute(sys, g, mask, threads=3)


def test_function_average_matches_set_density(rng):
    g = GroupDescriptor.cyclic(17)
    mask = rng.random(17) < 0.5
    for sys in (ap3_binary(), ap_system(3)):
        assert function_pattern_average(sys, g, mask.astype(float)) == pytest.approx(float(pattern_density(sys, g, mask)))


def test_structural_validation():
    with pytest.raises(StructuralError):
        LinearSystem.from_rows([[1, 0], [1, 0, 0]])
    with pytest.raises(StructuralError):
        LinearSystem.from_rows([[1, 1], [1, 1]])
    with pytest.raises(DomainError):
        underlying_graph(ap_system(3).__class__.from_rows([[1, 1, 1]]))


def test_binary_and_underlying_graph():
    sys = ap3_binary()
    assert is_binary(sys) and not is_binary(ap_system(3))
    assert underlying_graph(sys).edges == ((0, 1), (0, 2), (1, 2))


def test_translation_invariance():
    assert is_translation_invariant(ap_system(3), GroupDescriptor.cyclic(9))
    # 2x1 + 2x2 = (1, 1, 1) has no solution mod 2
    odd_only = LinearSystem.from_rows([[2, 0], [0, 2]])
    assert not is_translation_invariant(odd_only, GroupDescriptor.cyclic(10))
    assert is_translation_invariant(odd_only, GroupDescriptor.cyclic(9))


@given(binary_instances(max_d=3, max_order=12))
def test_ti_methods_agree(inst):
    sys, g, _ = inst
    assert is_translation_invariant(sys, g, "brute") == is_translation_invariant(sys, g, "congruence")


def test_translation_closure_is_invariant():
    sys = LinearSystem.from_rows([[2, 0], [0, 2]])
    assert is_translation_invariant(translation_closure(sys), GroupDescriptor.cyclic(10))


def test_nondegenerate_search():
    g = GroupDescriptor.cyclic(11)
    full = np.ones(11, dtype=bool)
    res = nondegenerate_search(ap_system(3), g, full)
    assert res.witness is not None and len(set(res.instance)) == 3
    # only y = 0 is degenerate for 3-APs in Z_11
    assert res.degenerate_count == 11
    tiny = np.zeros(11, dtype=bool)
    tiny[0] = True
    assert nondegenerate_search(ap_system(3), g, tiny).witness is None


@pytest.mark.parametrize("k", [3, 4, 5])
def test_cs_complexity_of_progressions(k):
    assert cs_complexity(ap_system(k)) == k - 2


def test_cs_complexity_binary_and_conventions():
    assert cs_complexity(ap3_binary()) == 1
    assert cs_complexity(clique_system(4)) == 1
    single = LinearSystem.from_rows([[1, 1]])
    assert cs_complexity(single) == 1 and cs_complexity(single, positive=False) == 0


def test_true_complexity():
    assert true_complexity(ap_system(4), 5) == 2
    assert true_complexity(ap_system(3), 5) == 1


def test_degeneracy_ordering():
    tri = OrientedGraph.triangle()
    assert degeneracy_ordering(tri, 1) is None
    order = degeneracy_ordering(tri, 2)
    assert sorted(order) == [0, 1, 2]
    assert degeneracy_ordering(OrientedGraph.path(4), 1) is not None


def test_modular_linear_algebra():
    assert rank_mod([[1, 2], [2, 4]], 7) == 1
    sol = solve_congruence([[2, 0], [0, 3]], [1, 1], 5)
    assert sol is not None and (2 * sol[0]) % 5 == 1 and (3 * sol[1]) % 5 == 1
    assert solve_congruence([[2]], [1], 4) is None
    M = np.array([[2, 4], [6, 8]])
    P, D, Q = (np.array(x) for x in smith_normal_form(M.tolist()))
    assert np.array_equal(P @ M @ Q, D)
    assert D[0, 1] == D[1, 0] == 0 and D[1, 1] % D[0, 0] == 0
    assert abs(round(np.linalg.det(P))) == abs(round(np.linalg.det(Q))) == 1


def test_density_is_fraction():
    g = GroupDescriptor.cyclic(5)
    d = pattern_density(ap3_binary(), g, [0, 1])
    assert isinstance(d, Fraction)
