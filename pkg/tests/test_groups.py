import numpy as np
import pytest
from hypothesis import given, strategies as st

from patternlab.errors import CoprimalityError, ResourceError, StructuralError
from patternlab.groups import (
    CharacterIndex,
    GroupDescriptor,
    GroupFunction,
    char_eval,
    character_matrix,
    convolution,
    cross_correlation,
    fourier_transform,
    inner,
    inverse_fourier,
    inverse_scalar,
    shift_counts,
)

groups = st.lists(st.integers(2, 7), min_size=1, max_size=3).map(lambda f: GroupDescriptor(tuple(f)))


def test_parse_formats():
    assert GroupDescriptor.parse("Z13").factors == (13,)
    assert GroupDescriptor.parse("F5^3").factors == (5, 5, 5)
    assert GroupDescriptor.parse("Z4xZ9").factors == (4, 9)
    with pytest.raises(StructuralError):
        GroupDescriptor.parse("Q7")


def test_character_values_match_definition():
    g = GroupDescriptor.parse("Z4xZ6")
    chi = CharacterIndex(g, (1, 5))
    x = g.element((3, 2))
    assert char_eval(chi, x) == pytest.approx(np.exp(2j * np.pi * (3 / 4 + 10 / 6)))


def test_fourier_of_indicator_of_zero():
    g = GroupDescriptor.cyclic(9)
    f = GroupFunction.indicator(g, [0])
    assert np.allclose(fourier_transform(f).values, 1 / 9)


@given(groups, st.integers(0, 2**32 - 1))
def test_fft_matches_direct_and_inverts(g, seed):
    r = np.random.default_rng(seed)
    f = GroupFunction(g, r.normal(size=g.order))
    fh = fourier_transform(f)
    assert np.allclose(fh.values, fourier_transform(f, "direct").values)
    assert np.allclose(inverse_fourier(fh).values, f.values)
    # Parseval with expectation normalisation
    assert np.isclose(np.sum(np.abs(fh.values) ** 2), np.mean(f.values**2))


@given(groups, st.integers(0, 2**32 - 1))
def test_convolution_identities(g, seed):
    r = np.random.default_rng(seed)
    f = GroupFunction(g, r.random(g.order))
    h = GroupFunction(g, r.random(g.order))
    conv = convolution(f, h)
    assert np.allclose(conv.values, convolution(f, h, "direct").values)
    assert np.allclose(fourier_transform(conv).values, fourier_transform(f).values * fourier_transform(h).values)
    assert np.allclose(cross_correlation(f, h).values, cross_correlation(f, h, "direct").values)


@given(groups, st.integers(0, 2**32 - 1))
def test_shift_counts_exact(g, seed):
    r = np.random.default_rng(seed)
    a, b = r.random(g.order) < 0.5, r.random(g.order) < 0.5
    c = shift_counts(a, b, g)
    for x in range(g.order):
        shifted = {int(g.add_idx(i, x)) for i in np.flatnonzero(a)}
        assert c[x] == len(shifted & set(np.flatnonzero(b).tolist()))


def test_character_matrix_orthogonality():
    g = GroupDescriptor.parse("Z3xZ4")
    M = character_matrix(g)
    assert np.allclose(M @ M.conj().T / g.order, np.eye(g.order))


def test_inverse_scalar():
    g = GroupDescriptor.cyclic(15)
    assert (inverse_scalar(2, g) * 2) % 15 == 1
    with pytest.raises(CoprimalityError):
        inverse_scalar(3, g)


def test_mismatched_groups_rejected():
    f = GroupFunction(GroupDescriptor.cyclic(4), np.ones(4))
    h = GroupFunction(GroupDescriptor.parse("Z2xZ2"), np.ones(4))
    with pytest.raises(StructuralError):
        inner(f, h)


def test_fourier_cap(monkeypatch):
    import patternlab.groups as G

    monkeypatch.setattr(G, "FOURIER_CAP", 8)
    with pytest.raises(ResourceError):
        fourier_transform(GroupFunction(GroupDescriptor.cyclic(9), np.ones(9)))
