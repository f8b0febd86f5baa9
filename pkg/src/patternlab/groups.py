"""Finite abelian groups as products of cyclic factors, with harmonic analysis.

Elements are enumerated in mixed-radix lexicographic order (first factor most
significant), so an element is interchangeably a coordinate tuple or an index
into a value table.

Fourier convention: f^(chi) = E_x f(x) e(+sum_j chi_j x_j / N_j), inverse
f(x) = sum_chi f^(chi) e(-chi.x).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .config import FOURIER_CAP
from .errors import CoprimalityError, ResourceError, StructuralError

_FACTOR_RE = re.compile(r"^(?:Z(\d+)|F(\d+)(?:\^(\d+))?)$")


@dataclass(frozen=True)
class GroupDescriptor:
    factors: tuple[int, ...]
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if not self.factors:
            raise StructuralError("a group needs at least one cyclic factor")
        if any(int(n) < 2 for n in self.factors):
            raise StructuralError(f"cyclic factors must be >= 2, got {self.factors}")
        object.__setattr__(self, "factors", tuple(int(n) for n in self.factors))
        if not self.label:
            object.__setattr__(self, "label", _default_label(self.factors))

    @classmethod
    def parse(cls, text: str) -> "GroupDescriptor":
        factors: list[int] = []
        for part in text.strip().split("x"):
            m = _FACTOR_RE.match(part.strip())
            if not m:
                raise StructuralError(f"cannot parse group descriptor {text!r}")
            if m.group(1):
                factors.append(int(m.group(1)))
            else:
                factors.extend([int(m.group(2))] * int(m.group(3) or 1))
        return cls(tuple(factors), label=text.strip())

    @classmethod
    def cyclic(cls, n: int) -> "GroupDescriptor":
        return cls((n,), label=f"Z{n}")

    @classmethod
    def vector_space(cls, q: int, n: int) -> "GroupDescriptor":
        return cls((q,) * n, label=f"F{q}^{n}")

    @property
    def order(self) -> int:
        return math.prod(self.factors)

    @property
    def rank(self) -> int:
        return len(self.factors)

    @property
    def exponent(self) -> int:
        return math.lcm(*self.factors)

    @property
    def is_cyclic_single(self) -> bool:
        return len(self.factors) == 1

    @cached_property
    def strides(self) -> np.ndarray:
        s = np.ones(len(self.factors), dtype=np.int64)
        for i in range(len(self.factors) - 2, -1, -1):
            s[i] = s[i + 1] * self.factors[i + 1]
        return s

    @cached_property
    def moduli(self) -> np.ndarray:
        return np.array(self.factors, dtype=np.int64)

    @cached_property
    def coords(self) -> np.ndarray:
        """(order, rank) table of coordinates of every element."""
        idx = np.arange(self.order, dtype=np.int64)
        return (idx[:, None] // self.strides[None, :]) % self.moduli[None, :]

    # -- index arithmetic (vectorised) -------------------------------------
    def index_of(self, coords) -> np.ndarray | int:
        c = np.asarray(coords, dtype=np.int64) % self.moduli
        out = c @ self.strides
        return int(out) if np.ndim(out) == 0 else out

    def coords_of(self, idx) -> tuple[int, ...]:
        return tuple(int(v) for v in self.coords[int(idx)])

    def add_idx(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.is_cyclic_single:
            return (a + b) % self.factors[0]
        c = (self.coords[a] + self.coords[b]) % self.moduli
        return c @ self.strides

    def sub_idx(self, a, b) -> np.ndarray:
        return self.add_idx(a, self.neg_idx(b))

    def neg_idx(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if self.is_cyclic_single:
            return (-a) % self.factors[0]
        return ((-self.coords[a]) % self.moduli) @ self.strides

    def scale_idx(self, k: int, a) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if self.is_cyclic_single:
            return (int(k) * a) % self.factors[0]
        return ((int(k) * self.coords[a]) % self.moduli) @ self.strides

    @cached_property
    def _scale_cache(self) -> dict:
        return {}

    def scale_map(self, k: int) -> np.ndarray:
        """Array m with m[x] = index of k*x."""
        k = int(k) % self.exponent
        cache = self._scale_cache
        if k not in cache:
            cache[k] = self.scale_idx(k, np.arange(self.order))
        return cache[k]

    def shape(self) -> tuple[int, ...]:
        return self.factors

    def element(self, coords: Sequence[int]) -> "GroupElement":
        return GroupElement(self, tuple(int(c) % n for c, n in zip(coords, self.factors)))

    def zero(self) -> "GroupElement":
        return GroupElement(self, (0,) * self.rank)

    def elements(self) -> Iterable["GroupElement"]:
        for row in self.coords:
            yield GroupElement(self, tuple(int(v) for v in row))

    def __str__(self) -> str:
        return self.label


def _default_label(factors: tuple[int, ...]) -> str:
    if len(set(factors)) == 1 and len(factors) > 1:
        return f"F{factors[0]}^{len(factors)}"
    return "x".join(f"Z{n}" for n in factors)


@dataclass(frozen=True)
class GroupElement:
    group: GroupDescriptor
    coords: tuple[int, ...]

    def __post_init__(self):
        if len(self.coords) != self.group.rank:
            raise StructuralError("coordinate count does not match the group")
        for c, n in zip(self.coords, self.group.factors):
            if not 0 <= c < n:
                raise StructuralError(f"coordinate {c} out of range for Z{n}")

    @property
    def index(self) -> int:
        return int(self.group.index_of(self.coords))

    def __add__(self, other: "GroupElement") -> "GroupElement":
        return add(self, other)

    def __neg__(self) -> "GroupElement":
        return scalar_mul(-1, self)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return add(self, -other)

    def __rmul__(self, k: int) -> "GroupElement":
        return scalar_mul(k, self)


@dataclass(frozen=True)
class CharacterIndex:
    group: GroupDescriptor
    coords: tuple[int, ...]

    def __post_init__(self):
        if len(self.coords) != self.group.rank:
            raise StructuralError("character shape does not match the group")
        object.__setattr__(
            self, "coords", tuple(int(c) % n for c, n in zip(self.coords, self.group.factors))
        )

    @property
    def is_trivial(self) -> bool:
        return not any(self.coords)


def add(x: GroupElement, y: GroupElement) -> GroupElement:
    if x.group != y.group:
        raise StructuralError("cannot add elements of different groups")
    return GroupElement(
        x.group, tuple((a + b) % n for a, b, n in zip(x.coords, y.coords, x.group.factors))
    )


def scalar_mul(k: int, x: GroupElement) -> GroupElement:
    return GroupElement(x.group, tuple((k * a) % n for a, n in zip(x.coords, x.group.factors)))


def inverse_scalar(lam: int, group: GroupDescriptor) -> int:
    n = group.order
    if math.gcd(lam, n) != 1:
        raise CoprimalityError(f"{lam} is not invertible modulo |G| = {n}")
    return pow(lam % n, -1, n) if n > 1 else 0


def char_eval(chi: CharacterIndex, x: GroupElement) -> complex:
    if chi.group != x.group:
        raise StructuralError("character and element belong to different groups")
    return complex(np.exp(2j * np.pi * _phase(chi.coords, x.coords, chi.group.factors)))


def _phase(chi, x, factors) -> float:
    # exact rational phase, reduced mod 1 before converting to float
    from fractions import Fraction

    theta = sum(Fraction(c * v, n) for c, v, n in zip(chi, x, factors))
    return float(theta - math.floor(theta))


def phase_numerators(group: GroupDescriptor, chi: Sequence[int]) -> np.ndarray:
    """Integer r(x) in [0, L) with chi(x) = e(r(x)/L), L the group exponent."""
    L = group.exponent
    weights = np.array([(int(c) % n) * (L // n) for c, n in zip(chi, group.factors)], dtype=np.int64)
    return (group.coords @ weights) % L


@dataclass(frozen=True, eq=False)
class GroupFunction:
    group: GroupDescriptor
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.group.order,):
            raise StructuralError(
                f"table length {v.shape} does not match group order {self.group.order}"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def indicator(cls, group: GroupDescriptor, members) -> "GroupFunction":
        v = np.zeros(group.order)
        v[np.asarray(list(members), dtype=np.int64)] = 1.0
        return cls(group, v)

    def mean(self):
        return self.values.mean()

    def at(self, x: GroupElement):
        return self.values[x.index]


def _check_cap(group: GroupDescriptor) -> None:
    if group.order > FOURIER_CAP:
        raise ResourceError(f"|G| = {group.order} exceeds the Fourier cap {FOURIER_CAP}")


def character_matrix(group: GroupDescriptor) -> np.ndarray:
    """Dense |G| x |G| matrix of chi(x); rows indexed by characters."""
    L = group.exponent
    # phase numerator r(chi, x) = sum_j chi_j x_j (L / N_j) mod L
    scaled = group.coords * (L // group.moduli)[None, :]
    r = (group.coords @ scaled.T) % L
    return np.exp(2j * np.pi * r / L)


def fourier_transform(f: GroupFunction, method: str = "fft") -> GroupFunction:
    g = f.group
    _check_cap(g)
    if method == "direct":
        return GroupFunction(g, character_matrix(g) @ f.values / g.order)
    tensor = np.asarray(f.values, dtype=complex).reshape(g.factors)
    # numpy's ifftn is (1/N) sum f e^{+2 pi i k.x / N}: exactly our convention
    return GroupFunction(g, np.fft.ifftn(tensor).reshape(-1))


def inverse_fourier(fhat: GroupFunction, method: str = "fft") -> GroupFunction:
    g = fhat.group
    _check_cap(g)
    if method == "direct":
        return GroupFunction(g, np.conj(character_matrix(g)).T @ fhat.values)
    tensor = np.asarray(fhat.values, dtype=complex).reshape(g.factors)
    return GroupFunction(g, np.fft.fftn(tensor).reshape(-1))


def _same_group(f: GroupFunction, g: GroupFunction) -> None:
    if f.group != g.group:
        raise StructuralError("functions live on different groups")


def convolution(f: GroupFunction, g: GroupFunction, method: str = "fft") -> GroupFunction:
    """(f*g)(x) = E_y f(y) g(x - y)."""
    _same_group(f, g)
    G = f.group
    if method == "direct":
        out = np.zeros(G.order, dtype=np.result_type(f.values, g.values, float))
        ys = np.arange(G.order)
        for x in range(G.order):
            out[x] = np.mean(f.values * g.values[G.sub_idx(x, ys)])
        return GroupFunction(G, out)
    fh = fourier_transform(f).values
    gh = fourier_transform(g).values
    out = inverse_fourier(GroupFunction(G, fh * gh)).values
    return GroupFunction(G, _maybe_real(out, f, g))


def cross_correlation(f: GroupFunction, g: GroupFunction, method: str = "fft") -> GroupFunction:
    """(f star g)(x) = E_y f(y) g(x + y)."""
    _same_group(f, g)
    G = f.group
    if method == "direct":
        out = np.zeros(G.order, dtype=np.result_type(f.values, g.values, float))
        ys = np.arange(G.order)
        for x in range(G.order):
            out[x] = np.mean(f.values * g.values[G.add_idx(x, ys)])
        return GroupFunction(G, out)
    # (f star g)^(chi) = f^(-chi) g^(chi)
    fh = fourier_transform(f).values
    gh = fourier_transform(g).values
    fh_neg = fh[G.neg_idx(np.arange(G.order))]
    out = inverse_fourier(GroupFunction(G, fh_neg * gh)).values
    return GroupFunction(G, _maybe_real(out, f, g))


def _maybe_real(out: np.ndarray, f: GroupFunction, g: GroupFunction) -> np.ndarray:
    if np.isrealobj(f.values) and np.isrealobj(g.values):
        return out.real.copy()
    return out


def inner(f: GroupFunction, g: GroupFunction) -> complex:
    """<f, g> = E_x f(x) conj(g(x))."""
    _same_group(f, g)
    return np.mean(f.values * np.conj(g.values))


def shift_counts(a_mask: np.ndarray, b_mask: np.ndarray, group: GroupDescriptor) -> np.ndarray:
    """c[x] = |(A + x) & B| for 0/1 masks, as exact integers."""
    fa = GroupFunction(group, np.asarray(a_mask, dtype=float))
    fb = GroupFunction(group, np.asarray(b_mask, dtype=float))
    # |G| * (A star B)(x) = sum_a A(a) B(a + x)
    corr = cross_correlation(fa, fb).values * group.order
    out = np.rint(corr)
    if np.max(np.abs(corr - out), initial=0.0) > 0.25:
        raise ResourceError("FFT rounding too coarse for exact shift counts")
    return out.astype(np.int64)
