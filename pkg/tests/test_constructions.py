import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from patternlab.constructions import (
    QuadraticForm,
    build_f,
    delta_rho,
    delta_rho_closed,
    gamma_analysis,
    gamma_space,
    gauss_G,
    in_gamma,
    max_nontrivial_fourier,
    product_identity,
    round_to_set,
    sample_rectangles,
    set_pattern_count,
    spreadness_certificate,
    t_of_function,
)
from patternlab.errors import DomainError
from patternlab.groups import GroupDescriptor, GroupFunction, fourier_transform
from patternlab.linear_systems import ap_system, pattern_count

AP4 = ap_system(4)
AP3 = ap_system(3)


def test_quadratic_form():
    Q = QuadraticForm(4, 5)
    assert Q.evaluate(np.array([1, 2, 3, 4])) == (2 + 12) % 5
    with pytest.raises(DomainError):
        QuadraticForm(3, 5)


def test_gamma_space():
    assert gamma_space(AP3, 5) == []
    basis = gamma_space(AP4, 5)
    assert len(basis) == 1
    v = basis[0]
    # sum_i rho_i (1, i)(1, i)^T vanishes mod 5
    for a, b in itertools.product(range(2), repeat=2):
        assert sum(r * (i if a else 1) * (i if b else 1) for i, r in enumerate(v)) % 5 == 0


@given(st.lists(st.integers(0, 4), min_size=4, max_size=4))
def test_delta_rho_closed_form(rho):
    direct = delta_rho(AP4, 5, rho)
    assert direct == pytest.approx(delta_rho_closed(AP4, 5, rho), abs=1e-12)
    if in_gamma(AP4, 5, rho):
        assert direct == pytest.approx(1.0)
    else:
        assert direct <= 0.2 + 1e-12


def test_gauss_G():
    vals, coeffs = gauss_G(5)
    assert vals[0] == pytest.approx(0.9) and vals.mean() == pytest.approx(0.5)
    assert np.all(vals >= 0) and np.all(vals <= 1) and np.all(coeffs > 0)
    f = GroupFunction(GroupDescriptor.cyclic(5), vals)
    assert np.allclose(fourier_transform(f).values.real, coeffs)


@pytest.mark.parametrize("n", [2, 4])
def test_t_of_f_matches_rho_expansion(n):
    f = build_f(5, n)
    ga = gamma_analysis(AP4, 5, n)
    assert t_of_function(AP4, f) == pytest.approx(ga.formula, rel=1e-9)
    assert abs(ga.formula - ga.gamma_sum) <= ga.constant * ga.envelope


def test_product_identity():
    lhs, rhs = product_identity(AP4, 5, 2, (1, 2, 0, 3))
    assert lhs == pytest.approx(rhs, abs=1e-9)


def test_fourier_decay():
    vals = [max_nontrivial_fourier(build_f(5, n)) for n in (2, 4)]
    assert vals[1] < vals[0]


def test_rounding_is_seed_deterministic():
    f = build_f(5, 2)
    a, b = round_to_set(f, 3), round_to_set(f, 3)
    assert np.array_equal(a.mask, b.mask)
    assert not np.array_equal(a.mask, round_to_set(f, 4).mask)


def test_set_pattern_count_exact():
    g = GroupDescriptor.vector_space(5, 2)
    mask = round_to_set(build_f(5, 2), 1).mask
    assert set_pattern_count(AP4, g, mask) == pattern_count(AP4, g, mask)


def test_spreadness_certificate_bounds_rectangles():
    g = GroupDescriptor.vector_space(5, 4)
    mask = round_to_set(build_f(5, 4), 7).mask
    cert = spreadness_certificate(g, mask, [1, 2])
    assert cert.deltas[2] == pytest.approx(4 * cert.max_fourier)
    for dev, bound in sample_rectangles(g, mask, cert, 2, 50, seed=1):
        assert dev <= bound
