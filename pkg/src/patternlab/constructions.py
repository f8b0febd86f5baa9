"""A spread but pattern-rich construction over F_q^n.

f = G o Q with Q the hyperbolic quadratic form and G a [0, 1]-valued bump
whose Fourier coefficients are all positive.  Also: the dependency space of
squared forms, the bilinear character sums Delta_rho, randomized rounding and
a Fourier certificate for rectangle spreadness.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .config import check_budget
from .errors import DomainError, PreconditionError, ResourceError
from .groups import GroupDescriptor, GroupFunction, fourier_transform, convolution
from .linear_systems import LinearSystem, function_pattern_average
from .modlinalg import kernel_mod, rank_mod


@dataclass(frozen=True)
class QuadraticForm:
    """Q(y) = y1 y2 + y3 y4 + ... + y_{n-1} y_n over F_q."""

    n: int
    q: int

    def __post_init__(self):
        if self.n <= 0 or self.n % 2:
            raise DomainError("n must be a positive even integer")

    def evaluate(self, coords: np.ndarray) -> np.ndarray:
        c = np.asarray(coords, dtype=np.int64)
        return (c[..., 0::2] * c[..., 1::2]).sum(axis=-1) % self.q


def _check_prime(q: int) -> None:
    if q < 2 or any(q % p == 0 for p in range(2, int(math.isqrt(q)) + 1)):
        raise DomainError(f"q = {q} must be prime")


# -- dependency space and Delta_rho ---------------------------------------------------

def square_matrix(system: LinearSystem, q: int) -> list[list[int]]:
    """Rows vec(l_i l_i^T) mod q, one per form."""
    return [[(a * b) % q for a in f.coeffs for b in f.coeffs] for f in system.forms]


def gamma_space(system: LinearSystem, q: int) -> list[list[int]]:
    """Basis of {rho in F_q^m : sum_i rho_i L_i^2 = 0}."""
    _check_prime(q)
    rows = square_matrix(system, q)
    transposed = [list(col) for col in zip(*rows)]
    return kernel_mod(transposed, q)


def bilinear_matrix(system: LinearSystem, q: int, rho) -> list[list[int]]:
    d = system.d
    M = [[0] * d for _ in range(d)]
    for r, f in zip(rho, system.forms):
        for a in range(d):
            for b in range(d):
                M[a][b] = (M[a][b] + r * f.coeffs[a] * f.coeffs[b]) % q
    return M


def delta_rho(system: LinearSystem, q: int, rho, cap: int | None = None) -> float:
    """|E_{x, y in F^d} e(sum_i rho_i L_i(x) L_i(y) / q)| by direct summation."""
    d = system.d
    if len(rho) != system.m:
        raise DomainError("rho needs one entry per form")
    check_budget(q ** (2 * d), "bilinear character sum", cap)
    M = np.array(bilinear_matrix(system, q, rho), dtype=np.int64)
    pts = np.array(list(itertools.product(range(q), repeat=d)), dtype=np.int64)
    vals = (pts @ M @ pts.T) % q
    return float(abs(np.exp(2j * np.pi * vals / q).mean()))


def delta_rho_closed(system: LinearSystem, q: int, rho) -> float:
    """The same sum in closed form: q^(-rank M_rho)."""
    return float(q ** -rank_mod(bilinear_matrix(system, q, rho), q))


def in_gamma(system: LinearSystem, q: int, rho) -> bool:
    return rank_mod(bilinear_matrix(system, q, rho), q) == 0


# -- the function f -----------------------------------------------------------------------

def gauss_G(q: int) -> tuple[np.ndarray, np.ndarray]:
    """G(z) = 1/2 + sum_{gamma != 0} e(gamma z / q) / (2q), with its Fourier coefficients."""
    _check_prime(q)
    z = np.arange(q)
    vals = 0.5 + sum(np.cos(2 * np.pi * g * z / q) for g in range(1, q)) / (2 * q)
    coeffs = np.full(q, 1 / (2 * q))
    coeffs[0] = 0.5
    return vals, coeffs


def build_f(q: int, n: int, cap: int | None = None) -> GroupFunction:
    group = GroupDescriptor.vector_space(q, n)
    check_budget(group.order, "function table", cap)
    G, _ = gauss_G(q)
    Q = QuadraticForm(n, q)
    return GroupFunction(group, G[Q.evaluate(group.coords)])


def max_nontrivial_fourier(f: GroupFunction) -> float:
    spec = np.abs(fourier_transform(f).values)
    return float(spec[1:].max()) if len(spec) > 1 else 0.0


def t_of_function(system: LinearSystem, f: GroupFunction, cap: int | None = 10**9) -> float:
    return function_pattern_average(system, f.group, f.values, cap=cap)


def set_pattern_count(system: LinearSystem, group: GroupDescriptor, mask, cap: int | None = 10**9) -> int:
    """Exact pattern count of a set; sums of 0/1 products stay exact in float64 up to 2^53."""
    total = group.order**system.d
    if total >= 2**53:
        raise ResourceError("pattern count beyond the exact float range")
    avg = function_pattern_average(system, group, np.asarray(mask, dtype=float), cap=cap)
    return int(round(avg * total))


@dataclass(frozen=True)
class GammaAnalysis:
    gamma_sum: float  # sum over rho in Gamma of prod G^(rho_i)
    formula: float  # exact t_L(f) as a sum over all rho
    constant: float  # sum over rho outside Gamma of prod G^(rho_i)
    envelope: float  # q^(-n/4)
    gamma_dim: int


def gamma_analysis(system: LinearSystem, q: int, n: int, cap: int = 10**6) -> GammaAnalysis:
    """Expand t_L(G o Q) over all rho in F_q^m using Delta_rho^(n/2) = q^(-rank(M_rho) n/2)."""
    m = system.m
    check_budget(q**m, "enumeration of rho", cap)
    _, Ghat = gauss_G(q)
    gamma_sum = formula = outside = 0.0
    for rho in itertools.product(range(q), repeat=m):
        weight = float(np.prod(Ghat[list(rho)]))
        rank = rank_mod(bilinear_matrix(system, q, rho), q)
        formula += weight * float(q) ** (-rank * n / 2)
        if rank == 0:
            gamma_sum += weight
        else:
            outside += weight
    return GammaAnalysis(gamma_sum, formula, outside, q ** (-n / 4), len(gamma_space(system, q)))


def product_identity(system: LinearSystem, q: int, n: int, rho, cap: int | None = 10**8) -> tuple[float, float]:
    """(E_x e(sum rho_i Q(L_i(x)) / q), Delta_rho^(n/2)), the first by enumeration."""
    group = GroupDescriptor.vector_space(q, n)
    Qf = QuadraticForm(n, q)
    d = system.d
    check_budget(group.order**d, "quadratic character sum", cap)
    vals = np.exp(2j * np.pi * np.arange(q) / q)
    M = system.matrix
    total = 0j
    coords = group.coords
    for head in itertools.product(range(group.order), repeat=d - 1):
        h = coords[list(head)] if head else np.zeros((0, n), dtype=np.int64)
        phase = np.zeros(group.order, dtype=np.int64)
        for r, row in zip(rho, M):
            pt = (sum(int(c) * h[j] for j, c in enumerate(row[:-1])) if d > 1 else 0) + int(row[-1]) * coords
            phase += int(r) * Qf.evaluate(pt % q)
        total += vals[phase % q].sum()
    lhs = total / group.order**d
    return float(lhs.real), delta_rho(system, q, rho) ** (n // 2)


# -- rounding and spreadness ---------------------------------------------------------------

@dataclass(frozen=True)
class RoundedSet:
    mask: np.ndarray
    density: float
    fourier_gap: float  # max |(1_A - f)^(chi)|
    threshold: float  # |G|^(-1/3)
    seed: int


def round_to_set(f: GroupFunction, seed: int) -> RoundedSet:
    v = np.asarray(f.values, dtype=float)
    if v.min() < -1e-12 or v.max() > 1 + 1e-12:
        raise PreconditionError("values must lie in [0, 1]")
    # counter-based stream: element x always receives the x-th draw for this seed
    u = np.random.Generator(np.random.Philox(key=seed)).random(len(v))
    mask = u < v
    gap = float(np.abs(fourier_transform(GroupFunction(f.group, mask - v)).values).max())
    return RoundedSet(mask, float(mask.mean()), gap, f.group.order ** (-1 / 3), seed)


@dataclass
class SpreadCertificate:
    beta: float
    max_fourier: float
    order: int
    deltas: dict = field(default_factory=dict)  # r -> M * 2^r

    def rectangle_bound(self, s: int, t: int) -> float:
        return self.max_fourier * self.order / math.sqrt(s * t)


def spreadness_certificate(group: GroupDescriptor, A, r_list) -> SpreadCertificate:
    mask = np.asarray(A, dtype=bool)
    if mask.shape != (group.order,):
        raise DomainError("A must be a mask over the group")
    M = max_nontrivial_fourier(GroupFunction(group, mask.astype(float)))
    return SpreadCertificate(float(mask.mean()), M, group.order, {r: M * 2.0**r for r in r_list})


def rectangle_deviation(group: GroupDescriptor, mask: np.ndarray, S: np.ndarray, T: np.ndarray) -> float:
    """|E_{x in S, y in T} A(x + y) - beta|."""
    conv = convolution(GroupFunction(group, S.astype(float)), GroupFunction(group, T.astype(float))).values
    # (1_S * 1_T)(z) = E_x S(x) T(z - x); weight of z in S + T is |G| * conv(z)
    total = float(np.dot(np.real(conv), mask)) * group.order
    return abs(total / (S.sum() * T.sum()) - mask.mean())


def sample_rectangles(group: GroupDescriptor, mask: np.ndarray, cert: SpreadCertificate, r: float, samples: int, seed: int = 0):
    """Deviation and certified bound for random S, T of density 2^-r."""
    rng = np.random.default_rng(seed)
    size = max(1, int(round(2.0 ** (-r) * group.order)))
    out = []
    for _ in range(samples):
        S = np.zeros(group.order, dtype=bool)
        T = np.zeros(group.order, dtype=bool)
        S[rng.choice(group.order, size, replace=False)] = True
        T[rng.choice(group.order, size, replace=False)] = True
        out.append((rectangle_deviation(group, mask, S, T), cert.rectangle_bound(size, size)))
    return out
