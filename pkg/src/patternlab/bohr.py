"""Bohr sets: construction, exact regularity, dilates and shift-selection searches."""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .config import GUARD
from .errors import DomainError, InternalCheckError, PreconditionError, StructuralError
from .groups import CharacterIndex, GroupDescriptor, GroupFunction, phase_numerators, shift_counts
from .linear_systems import as_mask

DEFAULT_SHIFT_CONSTANT = 1 / 400


def _freq_tuple(group: GroupDescriptor, chi) -> tuple[int, ...]:
    if isinstance(chi, CharacterIndex):
        if chi.group != group:
            raise StructuralError("frequency from another group")
        return chi.coords
    if isinstance(chi, (int, np.integer)):
        if group.rank != 1:
            raise StructuralError("integer frequencies need a cyclic group")
        chi = (int(chi),)
    return CharacterIndex(group, tuple(int(c) for c in chi)).coords


def _phase_key(group: GroupDescriptor, freqs: Sequence[tuple[int, ...]]) -> np.ndarray:
    """R(x) = max over frequencies of the distance of the phase numerator to 0 mod L."""
    L = group.exponent
    key = np.zeros(group.order, dtype=np.int64)
    for chi in freqs:
        r = phase_numerators(group, chi)
        np.maximum(key, np.minimum(r, L - r), out=key)
    return key


def chord(key, L: int):
    """|e(R/L) - 1| = 2 sin(pi R / L)."""
    return 2 * np.sin(np.pi * np.asarray(key, dtype=float) / L)


@dataclass(frozen=True)
class BohrSet:
    """Bohr(Gamma, tau) remembered as the triple; equality is by triple."""

    group: GroupDescriptor
    frequencies: tuple[tuple[int, ...], ...]
    width: float
    _key: np.ndarray = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if not self.frequencies:
            raise DomainError("a Bohr set needs at least one frequency")
        if self.width < 0:
            raise DomainError("width must be non-negative")
        if self._key is None:
            object.__setattr__(self, "_key", _phase_key(self.group, self.frequencies))

    @property
    def rank(self) -> int:
        return len(self.frequencies)

    @property
    def nontrivial_rank(self) -> int:
        return sum(1 for f in self.frequencies if any(f))

    @cached_property
    def profile(self) -> np.ndarray:
        return chord(self._key, self.group.exponent)

    @cached_property
    def mask(self) -> np.ndarray:
        return self.profile <= self.width + GUARD

    @cached_property
    def members(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    @property
    def size(self) -> int:
        return len(self.members)

    def __len__(self) -> int:
        return self.size

    def contains(self, x: int) -> bool:
        return bool(self.mask[int(x)])

    def characters(self) -> list[CharacterIndex]:
        return [CharacterIndex(self.group, f) for f in self.frequencies]

    def to_json(self) -> dict:
        return {
            "group": self.group.label,
            "frequencies": [list(f) for f in self.frequencies],
            "width": self.width,
            "rank": self.rank,
            "size": self.size,
            "regular": is_regular(self),
        }


def bohr_build(group: GroupDescriptor, frequencies: Iterable, width: float) -> BohrSet:
    freqs = tuple(_freq_tuple(group, chi) for chi in frequencies)
    if not freqs:
        raise DomainError("a Bohr set needs at least one frequency")
    if not 0 <= width <= 2:
        raise DomainError("width must lie in [0, 2]")
    return BohrSet(group, freqs, float(width))


def whole_group(group: GroupDescriptor) -> BohrSet:
    """G as a Bohr set: the trivial character at width 0, so every dilate is G."""
    return BohrSet(group, ((0,) * group.rank,), 0.0)


def dilate(B: BohrSet, rho: float) -> BohrSet:
    if rho < 0:
        raise DomainError("dilation factor must be non-negative")
    return BohrSet(B.group, B.frequencies, B.width * rho, B._key)


def scalar_dilate(lam: int, B: BohrSet) -> BohrSet:
    """lam . B.  For lam coprime to |G| this is {lam x : x in B}."""
    g = B.group
    if math.gcd(lam, g.order) == 1:
        inv = pow(lam % g.exponent, -1, g.exponent) if g.exponent > 1 else 0
        freqs = tuple(_freq_tuple(g, tuple(inv * c for c in f)) for f in B.frequencies)
    else:
        warnings.warn(f"scalar {lam} is not coprime to |G|; returning the Bohr set with frequencies lam*chi")
        freqs = tuple(_freq_tuple(g, tuple(lam * c for c in f)) for f in B.frequencies)
    return BohrSet(g, freqs, B.width)


# -- regularity ----------------------------------------------------------------

@dataclass(frozen=True)
class _Steps:
    values: np.ndarray  # sorted distinct chord values
    cum: np.ndarray  # cum[i] = #{x : s(x) <= values[i]}


def _steps(B: BohrSet) -> _Steps:
    keys, counts = np.unique(B._key, return_counts=True)
    return _Steps(chord(keys, B.group.exponent), np.cumsum(counts))


def regularity_violation(B: BohrSet, steps: _Steps | None = None) -> float:
    """Largest violation of the two regularity inequalities over all breakpoints (<= 0 means regular)."""
    d = B.rank
    tau = B.width
    if tau == 0:
        return 0.0
    st = _steps(B) if steps is None else steps
    k0 = 1 / (100 * d)
    size = st.cum[np.searchsorted(st.values, tau + GUARD, side="right") - 1]
    kappa = st.values / tau - 1
    below = st.values <= tau + GUARD
    worst = -np.inf
    up = (~below) & (kappa <= k0)
    if up.any():
        worst = max(worst, float(np.max(st.cum[up] / size - 1 - 100 * d * kappa[up])))
    low = below & (kappa > -k0)
    if low.any():
        left = np.concatenate([[0], st.cum[:-1]])[low]
        worst = max(worst, float(np.max(1 - 100 * d * np.abs(kappa[low]) - left / size)))
    return worst if worst > -np.inf else -1.0


def is_regular(B: BohrSet) -> bool:
    return regularity_violation(B) <= 1e-12


def is_regular_grid(B: BohrSet, points: int = 10**4) -> bool:
    """Grid scan over kappa; a cross-check only, step functions can slip between grid points."""
    d = B.rank
    k0 = 1 / (100 * d)
    size = B.size
    s = np.sort(B.profile)
    for kappa in np.linspace(-k0, k0, points):
        n = np.searchsorted(s, (1 + kappa) * B.width + GUARD, side="right")
        if not (1 - 100 * d * abs(kappa)) * size - 1e-9 <= n <= (1 + 100 * d * abs(kappa)) * size + 1e-9:
            return False
    return True


@dataclass(frozen=True)
class RegularDilate:
    rho: float
    bohr: BohrSet
    passed: bool
    violation: float


_INTERIOR = (0.5, 0.25, 0.75, 0.1, 0.9)


def find_regular_dilate(B: BohrSet, low: float = 0.5, high: float = 1.0) -> RegularDilate:
    """Largest rho in [low, high] found (scanning downward) with B_rho regular."""
    if B.width == 0:
        return RegularDilate(high, dilate(B, high), True, 0.0)
    st = _steps(B)
    best: tuple[float, float] | None = None

    def trial(rho: float):
        nonlocal best
        D = dilate(B, rho)
        v = regularity_violation(D, st)
        if best is None or v < best[0]:
            best = (v, rho)
        return D, v

    D, v = trial(high)
    if v <= 1e-12:
        return RegularDilate(high, D, True, v)
    cuts = st.values / B.width
    cuts = cuts[(cuts > low) & (cuts < high)]
    edges = np.concatenate([[high], cuts[::-1], [low]])
    for hi, lo in zip(edges[:-1], edges[1:]):
        for frac in _INTERIOR:
            rho = float(lo + frac * (hi - lo))
            D, v = trial(rho)
            if v <= 1e-12:
                return RegularDilate(rho, D, True, v)
    v, rho = best
    return RegularDilate(rho, dilate(B, rho), False, v)


# -- densities and shifts ----------------------------------------------------------

def mu_density(B: BohrSet, A) -> Fraction:
    mask = as_mask(B.group, A)
    return Fraction(int(np.count_nonzero(mask & B.mask)), B.size)


def normalized_indicator(B: BohrSet) -> GroupFunction:
    return GroupFunction(B.group, B.mask * (B.group.order / B.size))


def shift_l1_distance(B: BohrSet, x: int, rho: float | None = None) -> float:
    shifted = B.mask[B.group.sub_idx(np.arange(B.group.order), x)]
    value = np.count_nonzero(B.mask ^ shifted) / B.size
    if rho is not None and dilate(B, rho).contains(x) and is_regular(B):
        if value > 200 * rho * B.rank + 1e-12:
            raise InternalCheckError(f"shift distance {value} exceeds 200 rho d")
    return float(value)


@dataclass(frozen=True)
class ShiftSelection:
    shift: int
    case: int  # 1: uniform on the family; 2: increment on `witness`
    witness: int | None
    densities: tuple[float, ...]
    alpha: float


def contained_rho(B: BohrSet, sub: BohrSet) -> float:
    """Least rho with sub contained in B_rho."""
    if B.width == 0:
        return 0.0 if np.all(B.profile[sub.members] <= GUARD) else math.inf
    return float(B.profile[sub.members].max() / B.width)


def uniform_shift_select(
    B: BohrSet,
    A,
    family: Sequence[BohrSet],
    gamma: float,
    rho: float | None = None,
    c: float = DEFAULT_SHIFT_CONSTANT,
    require_regular: bool = True,
    allowed: np.ndarray | None = None,
) -> ShiftSelection:
    mask = as_mask(B.group, A)
    if np.any(mask & ~B.mask):
        raise PreconditionError("A must be a subset of B")
    if not family:
        raise PreconditionError("the family of Bohr sets is empty")
    if require_regular and not is_regular(B):
        raise PreconditionError("B must be regular")
    alpha = np.count_nonzero(mask) / B.size
    if alpha == 0:
        raise PreconditionError("A is empty")
    n = len(family)
    needed = max(contained_rho(B, Bp) for Bp in family)
    if rho is None:
        rho = needed
    elif needed > rho * (1 + 1e-12):
        raise PreconditionError(f"family not contained in B_rho (needs rho >= {needed})")
    limit = c * gamma * alpha / (B.rank * n)
    if rho > limit:
        raise PreconditionError(f"rho = {rho} exceeds c*gamma*alpha/(d|family|) = {limit}")

    dens = np.array([shift_counts(mask, Bp.mask, B.group) / Bp.size for Bp in family])
    avg = dens.mean(axis=0)
    target = (1 - gamma / (2 * n)) * alpha
    pool = B.mask if allowed is None else B.mask & allowed
    good = np.flatnonzero(pool & (avg >= target - 1e-12))
    if good.size == 0:
        raise InternalCheckError("no shift in B meets the averaged density bound")
    x = int(good[0])
    mus = dens[:, x]
    if np.all(np.abs(mus - alpha) <= gamma * alpha + 1e-12):
        return ShiftSelection(x, 1, None, tuple(map(float, mus)), alpha)
    up = np.flatnonzero(mus >= (1 + gamma / (2 * n)) * alpha - 1e-12)
    if up.size == 0:
        raise InternalCheckError("deviation without an upward witness")
    return ShiftSelection(x, 2, int(up[0]), tuple(map(float, mus)), alpha)


# -- spreadness ----------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    bohr: BohrSet
    shift: int
    density: float


@dataclass(frozen=True)
class SpreadVerdict:
    spread: bool
    exhaustive: bool
    checked: int
    alpha: float
    violation: Violation | None = None


def _character_reps(group: GroupDescriptor) -> list[tuple[int, ...]]:
    """One nontrivial character from each pair {chi, -chi}."""
    out = []
    for idx in range(1, group.order):
        neg = int(group.neg_idx(idx))
        if idx <= neg:
            out.append(tuple(int(c) for c in group.coords[idx]))
    return out


def _widths(freqs, group: GroupDescriptor, min_size: int) -> tuple[np.ndarray, list[tuple[float, int]]]:
    """Midpoint widths between consecutive profile values with their set sizes, smallest set first."""
    key = _phase_key(group, freqs)
    vals, counts = np.unique(key, return_counts=True)
    s = chord(vals, group.exponent)
    cum = np.cumsum(counts)
    mids = np.concatenate([(s[:-1] + s[1:]) / 2, [2.0]])
    return key, [(float(w), int(n)) for w, n in zip(mids, cum) if n >= min_size]


def is_algebraically_spread(
    B: BohrSet,
    A,
    delta: float,
    d_prime: int,
    r: float,
    search_budget: int = 20000,
    seed: int = 0,
    candidates: Sequence[BohrSet] | None = None,
    exhaustive_limit: int = 2,
    allowed: np.ndarray | None = None,
    combo_limit: int = 5000,
) -> SpreadVerdict:
    mask = as_mask(B.group, A)
    if np.any(mask & ~B.mask):
        raise PreconditionError("A must be a subset of B")
    g = B.group
    size_A = int(np.count_nonzero(mask))
    alpha = size_A / B.size
    min_size = math.ceil(2.0 ** (-r) * B.size - 1e-9)
    max_rank = B.nontrivial_rank + d_prime
    checked = 0
    tested = 0

    def hopeless(size: int) -> bool:
        # a shift can only capture min(|A|, |B'|) points
        return min(size_A, size) <= (1 + delta) * alpha * size + 1e-12

    def test(Bp: BohrSet) -> Violation | None:
        nonlocal tested
        if hopeless(Bp.size):
            return None
        tested += 1
        if not is_regular(Bp):
            return None
        counts = shift_counts(mask, Bp.mask, g)
        if allowed is not None:
            counts = np.where(allowed, counts, -1)
        hits = np.flatnonzero(counts > (1 + delta) * alpha * Bp.size + 1e-9)
        if hits.size:
            x = int(hits[0])
            return Violation(Bp, x, counts[x] / Bp.size)
        return None

    if candidates is not None:
        for Bp in candidates:
            if Bp.rank > max_rank or Bp.size < min_size:
                continue
            checked += 1
            v = test(Bp)
            if v:
                return SpreadVerdict(False, False, checked, alpha, v)
        return SpreadVerdict(True, False, checked, alpha)

    reps = _character_reps(g)
    n_combos = sum(math.comb(len(reps), k) for k in range(1, max_rank + 1))
    if max_rank <= exhaustive_limit and n_combos <= combo_limit:
        combos = itertools.chain.from_iterable(itertools.combinations(reps, k) for k in range(1, max_rank + 1))
        for freqs in combos:
            key, widths = _widths(freqs, g, min_size)
            checked += len(widths)
            for w, size in widths:
                if hopeless(size):
                    continue
                if tested >= search_budget:
                    return SpreadVerdict(True, False, checked, alpha)
                v = test(BohrSet(g, freqs, w, key))
                if v:
                    return SpreadVerdict(False, True, checked, alpha, v)
        return SpreadVerdict(True, True, checked, alpha)

    rng = np.random.default_rng(seed)
    while checked < search_budget:
        k = int(rng.integers(1, max_rank + 1))
        freqs = tuple(reps[i] for i in rng.choice(len(reps), size=min(k, len(reps)), replace=False))
        key, widths = _widths(freqs, g, min_size)
        if not widths:
            checked += 1
            continue
        w, _ = widths[int(rng.integers(len(widths)))]
        checked += 1
        v = test(BohrSet(g, freqs, w, key))
        if v:
            return SpreadVerdict(False, False, checked, alpha, v)
    return SpreadVerdict(True, False, checked, alpha)
