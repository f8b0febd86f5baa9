"""Density-increment engine for binary linear systems over Bohr sets.

Pieces: dependent random choice, the Bohr cascade B^(1..k), a rectangle
increment driven by the graph counting diagnosis, a searched Bohr-set
increment, and the outer loop that strings them together.
"""
from __future__ import annotations

import itertools
import math
import time
import warnings
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bohr import (
    BohrSet,
    dilate,
    find_regular_dilate,
    is_algebraically_spread,
    is_regular,
    scalar_dilate,
    uniform_shift_select,
    whole_group,
)
from .errors import (
    CascadeError,
    CoprimalityError,
    DomainError,
    InternalCheckError,
    PatternLabError,
    PreconditionError,
    SearchExhausted,
)
from .graph_counting import hom_density, main_count_diagnose
from .groups import GroupDescriptor, GroupFunction, fourier_transform, shift_counts
from .linear_systems import LinearSystem, as_mask, edge_coefficients, is_binary, underlying_graph
from .modlinalg import solve_congruence


# -- dependent random choice -------------------------------------------------------

def drc_ratio_bound(p: int, eps: float) -> float:
    return (1 + eps) ** p / ((1 + 2 * eps) ** p - 1)


def p_floor(eps: float, limit: int = 10**6) -> int:
    """Least p whose averaging bound (1+eps)^p / ((1+2eps)^p - 1) is at most eps/100."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    p = 1
    while drc_ratio_bound(p, eps) > eps / 100:
        p += 1
        if p > limit:
            raise DomainError("p floor exceeds the search limit")
    return p


@dataclass(frozen=True)
class DRCResult:
    A1: np.ndarray  # mask over G, subset of X1
    A2: np.ndarray
    y: tuple[int, ...]
    product_density: Fraction
    bad_probability: Fraction
    enumerated: bool
    tuples_checked: int


def _indices(group: GroupDescriptor, X) -> np.ndarray:
    return np.flatnonzero(as_mask(group, X))


def dependent_random_choice(
    group: GroupDescriptor,
    A,
    B,
    X1,
    X2,
    Y,
    p: int,
    eps: float,
    tau: float,
    sample_budget: int = 10**6,
    seed: int = 0,
    enforce_floor: bool = True,
) -> DRCResult:
    a = as_mask(group, A)
    b = as_mask(group, B)
    x1, x2, y = _indices(group, X1), _indices(group, X2), _indices(group, Y)
    if min(len(x1), len(x2), len(y)) == 0:
        raise PreconditionError("X1, X2 and Y must be non-empty")
    if p < 1 or eps <= 0 or tau <= 0:
        raise PreconditionError("need p >= 1, eps > 0, tau > 0")
    floor = p_floor(eps)
    if p < floor:
        if enforce_floor:
            raise PreconditionError(f"p = {p} is below the floor {floor} for eps = {eps}")
        warnings.warn(f"p = {p} is below the floor {floor}; the bad-pair bound may fail")

    # MA[i, t] = A(x1_i + y_t), MB[j, t] = B(x2_j + y_t)
    MA = a[group.add_idx(x1[:, None], y[None, :])]
    MB = b[group.add_idx(x2[:, None], y[None, :])]
    # float BLAS is exact here: entries are integers at most |Y|
    C = np.rint(MA.astype(float) @ MB.T.astype(float)).astype(np.int64)  # |Y| * inner expectation
    ny = len(y)
    tau_q = Fraction(tau)
    eps_q = Fraction(eps)
    values, counts = np.unique(C, return_counts=True)
    moment = sum(Fraction(int(v)) ** p * int(c) for v, c in zip(values, counts))
    moment /= len(x1) * len(x2) * ny**p
    if moment < ((1 + 2 * eps_q) * tau_q) ** p:
        raise PreconditionError("moment hypothesis fails")

    bad = (C <= float((1 + eps_q) * tau_q * ny)).astype(float)
    total = ny**p
    enumerated = total <= sample_budget
    if enumerated:
        tuples = np.array(list(itertools.product(range(ny), repeat=p)), dtype=np.int64).reshape(-1, p)
    else:
        rng = np.random.default_rng(seed)
        tuples = rng.integers(0, ny, size=(sample_budget, p))
    best = None
    thresh = float(tau_q**p) * len(x1) * len(x2)
    for start in range(0, len(tuples), 4096):
        chunk = tuples[start : start + 4096]
        am = np.logical_and.reduce(MA[:, chunk], axis=2).T  # (n, |X1|)
        bm = np.logical_and.reduce(MB[:, chunk], axis=2).T
        sa, sb = am.sum(axis=1), bm.sum(axis=1)
        in_lambda = sa * sb > thresh * (1 + 1e-12)
        if not in_lambda.any():
            continue
        badcount = ((am.astype(float) @ bad) * bm).sum(axis=1)
        ratio = np.where(in_lambda, badcount / np.maximum(sa * sb, 1), np.inf)
        i = int(np.argmin(ratio))
        if best is None or ratio[i] < best[0]:
            best = (float(ratio[i]), start + i, am[i], bm[i])
    if best is None:
        raise SearchExhausted("no tuple reaches the density threshold", None)

    _, idx, am, bm = best
    ytuple = tuple(int(y[t]) for t in tuples[idx])
    A1 = np.zeros(group.order, dtype=bool)
    A2 = np.zeros(group.order, dtype=bool)
    A1[x1[am]] = True
    A2[x2[bm]] = True
    prod = Fraction(int(am.sum()), len(x1)) * Fraction(int(bm.sum()), len(x2))
    sub = C[np.ix_(am, bm)]
    nbad = sum(1 for v in sub.ravel() if Fraction(int(v), ny) <= (1 + eps_q) * tau_q)
    pbad = Fraction(nbad, int(am.sum()) * int(bm.sum()))
    if prod < tau_q**p:
        raise InternalCheckError("selected tuple has product density below tau^p")
    if pbad > eps_q / 100:
        raise SearchExhausted(f"best bad-pair probability {float(pbad)} exceeds eps/100", float(pbad))
    return DRCResult(A1, A2, ytuple, prod, pbad, enumerated, len(tuples))


# -- cascade -----------------------------------------------------------------------------

def coefficient_product(system: LinearSystem) -> int:
    return math.prod(abs(l) * abs(e) for l, e in edge_coefficients(system).values())


def rho_formula(gamma: float, alpha: float, d: int, K: int, k: int, two_degenerate: bool = False) -> float:
    log_term = math.log2(2 / alpha)
    expo = log_term if two_degenerate else log_term**2
    return gamma * math.exp(-expo / gamma) / (1000 * d * K ** (k + 1))


def check_coprime(system: LinearSystem, group: GroupDescriptor) -> None:
    for l, e in edge_coefficients(system).values():
        for c in (l, e):
            if math.gcd(c, group.order) != 1:
                raise CoprimalityError(f"coefficient {c} is not coprime to |G| = {group.order}")


@dataclass
class CascadeConfig:
    system: LinearSystem
    K: int
    gamma: float
    rho: float
    rhos: list[float]
    sets: list[BohrSet]  # B^(i)
    windows: list[tuple[float, float]]
    family: list[BohrSet]
    checks: dict = field(default_factory=dict)
    size_ratios: list[float] = field(default_factory=list)


def _subset(a: BohrSet, b: BohrSet) -> bool:
    return not np.any(a.mask & ~b.mask)


def _vertex_inclusions(i, sets, B_rho, coeffs, rho) -> bool:
    """Inclusion checks touching vertex i, against partners already built."""
    for (u, v), (lam, eta) in coeffs.items():
        if u == i:
            left = scalar_dilate(lam, sets[i])
            if not _subset(left, B_rho):
                return False
            if sets[v] is not None and not _subset(left, dilate(scalar_dilate(eta, sets[v]), rho)):
                return False
        if v == i and not _subset(scalar_dilate(eta, sets[i]), B_rho):
            return False
    return True


def cascade_setup(
    B: BohrSet,
    system: LinearSystem,
    gamma: float,
    alpha: float,
    two_degenerate: bool = False,
    rho: float | None = None,
    mode: str = "windowed",
    scale_by_K: bool = True,
    max_halvings: int = 60,
) -> CascadeConfig:
    if not is_binary(system):
        raise DomainError("the cascade needs a binary system")
    check_coprime(system, B.group)
    H = underlying_graph(system)
    coeffs = edge_coefficients(system)
    k = H.k
    K = coefficient_product(system)
    d = max(1, B.nontrivial_rank)
    if rho is None:
        rho = rho_formula(gamma, alpha, d, K, k, two_degenerate)
    B_rho = dilate(B, rho)
    trivial = B.size == 1
    rhos: list[float] = [0.0] * k
    sets: list[BohrSet | None] = [None] * k
    windows: list[tuple[float, float]] = [(0.0, 0.0)] * k

    def build(i, r):
        base = dilate(B, r)
        mult = K ** (k - 1 - i) if scale_by_K else 1
        return base, (scalar_dilate(mult, base) if mult != 1 else base)

    for i in reversed(range(k)):
        if mode == "windowed":
            hi = rho / K if i == k - 1 else rho * rhos[i + 1] / K**k
            windows[i] = (hi / 2, hi)
            found = find_regular_dilate(dilate(B, hi))
            r = hi * found.rho
            base, Bi = build(i, r)
            if not found.passed:
                raise CascadeError(f"no regular dilate in window {windows[i]} for vertex {i}", windows[i])
            if base.size == 1 and not trivial:
                raise CascadeError(f"window {windows[i]} for vertex {i} is below the group's resolution", windows[i])
            rhos[i], sets[i] = r, Bi
        elif mode == "verified":
            hi = rho if i == k - 1 else rhos[i + 1]
            for _ in range(max_halvings):
                found = find_regular_dilate(dilate(B, hi))
                r = hi * found.rho
                base, Bi = build(i, r)
                if base.size == 1 and not trivial:
                    raise CascadeError(f"vertex {i}: dilates shrank below the group's resolution", (r, hi))
                sets[i] = Bi
                if found.passed and _vertex_inclusions(i, sets, B_rho, coeffs, rho):
                    break
                sets[i] = None
                hi /= 2
            else:
                raise CascadeError(f"vertex {i}: no dilate satisfies the inclusions", (0.0, hi))
            rhos[i], windows[i] = r, (hi / 2, hi)
        else:
            raise ValueError(f"unknown cascade mode {mode!r}")

    checks = {
        "regular": all(is_regular(dilate(B, r)) for r in rhos),
        "sandwich": all(
            rho * rhos[i + 1] / (2 * K**k) <= rhos[i] * (1 + 1e-12) and rhos[i] <= rho * rhos[i + 1] / K**k * (1 + 1e-12)
            for i in range(k - 1)
        ),
        "inside_B_rho": all(
            _subset(scalar_dilate(l, sets[u]), B_rho) and _subset(scalar_dilate(e, sets[v]), B_rho)
            for (u, v), (l, e) in coeffs.items()
        ),
        "nested": all(
            _subset(scalar_dilate(l, sets[u]), dilate(scalar_dilate(e, sets[v]), rho))
            for (u, v), (l, e) in coeffs.items()
        ),
    }
    if not (checks["inside_B_rho"] and checks["nested"]):
        raise InternalCheckError(f"cascade inclusions failed: {checks}")
    family: list[BohrSet] = []
    for (u, v), (l, e) in coeffs.items():
        for Bp in (scalar_dilate(l, sets[u]), scalar_dilate(e, sets[v])):
            if Bp not in family:
                family.append(Bp)
    ratios = [s.size / B.size for s in sets]
    return CascadeConfig(system, K, gamma, rho, rhos, list(sets), windows, family, checks, ratios)


# -- stage 1 ---------------------------------------------------------------------------------

@dataclass
class Stage1Result:
    kind: str  # certificate | rectangle | failed
    t: float
    target: float
    alpha_star: float
    claim_ok: bool
    claim_worst: float
    reason: str = ""
    edge: tuple[int, int] | None = None
    S: np.ndarray | None = None  # masks over G
    T: np.ndarray | None = None
    B_left: BohrSet | None = None  # lambda . B^(i)
    B_right: BohrSet | None = None  # eta . B^(j)
    rect_density: float | None = None
    bump: float | None = None
    diagnosis_variant: str | None = None


def shifted(group: GroupDescriptor, mask: np.ndarray, x: int) -> np.ndarray:
    """Mask of A + x."""
    return mask[group.sub_idx(np.arange(group.order), x)]


def edge_tables(group: GroupDescriptor, A: np.ndarray, system: LinearSystem, sets: Sequence[BohrSet]):
    tables = {}
    for (u, v), (lam, eta) in edge_coefficients(system).items():
        xs = group.scale_idx(lam, sets[u].members)
        ys = group.scale_idx(eta, sets[v].members)
        tables[(u, v)] = A[group.add_idx(xs[:, None], ys[None, :])].astype(float)
    return tables


def stage1_rectangle(
    B: BohrSet,
    A_shift: np.ndarray,
    system: LinearSystem,
    eps: float,
    cascade: CascadeConfig,
    alpha_star: float,
    p_cap: int = 4,
    cap: int | None = None,
) -> Stage1Result:
    if not eps > 0:
        raise DomainError("eps must be positive")
    g = B.group
    H = underlying_graph(system)
    tables = edge_tables(g, A_shift, system, cascade.sets)
    sizes = [s.size for s in cascade.sets]
    t = hom_density(H, tables, sizes)
    target = (1 - eps) * alpha_star**H.m
    worst = max(float(np.max(np.abs(tab.mean(axis=1) - alpha_star))) for tab in tables.values())
    claim_ok = worst <= 2 * cascade.gamma * alpha_star + 1e-12
    base = dict(t=t, target=target, alpha_star=alpha_star, claim_ok=claim_ok, claim_worst=worst / alpha_star)
    if t >= target:
        return Stage1Result("certificate", **base)
    diag = main_count_diagnose(H, tables, eps / 2, p_cap=p_cap, cap=cap)
    if diag.variant == "LowDegreeSet":
        if claim_ok:
            raise InternalCheckError("low-degree set found although the row-density claim (within 2*gamma*alpha) holds")
        return Stage1Result("failed", reason="low-degree set (row-density claim fails at these constants)", diagnosis_variant=diag.variant, **base)
    if diag.variant != "DenseRectangle":
        return Stage1Result("failed", reason=f"counting diagnosis returned {diag.variant}", diagnosis_variant=diag.variant, **base)
    u, v = diag.edge
    lam, eta = edge_coefficients(system)[diag.edge]
    S = np.zeros(g.order, dtype=bool)
    T = np.zeros(g.order, dtype=bool)
    S[g.scale_idx(lam, cascade.sets[u].members[list(diag.rectangle.S)])] = True
    T[g.scale_idx(eta, cascade.sets[v].members[list(diag.rectangle.T)])] = True
    dens = diag.rectangle.density(tables[diag.edge])
    bump = dens / alpha_star - 1
    if bump <= 0:
        return Stage1Result("failed", reason="rectangle carries no increment over the current density", edge=diag.edge, diagnosis_variant=diag.variant, **base)
    return Stage1Result(
        "rectangle", edge=diag.edge, S=S, T=T,
        B_left=scalar_dilate(lam, cascade.sets[u]), B_right=scalar_dilate(eta, cascade.sets[v]),
        rect_density=dens, bump=bump, diagnosis_variant=diag.variant, **base,
    )


# -- stage 2 ---------------------------------------------------------------------------------

@dataclass
class Stage2Result:
    bohr: BohrSet
    shift: int
    density: float
    target: float
    mechanism: str  # gamma-guided | fallback
    gamma_size: int
    candidates_checked: int
    holder: dict = field(default_factory=dict)
    drc: dict = field(default_factory=dict)


def _best_shift(A: np.ndarray, C: BohrSet, allowed: np.ndarray | None) -> tuple[int, float]:
    counts = shift_counts(A, C.mask, C.group)
    if allowed is not None:
        counts = np.where(allowed, counts, -1)
    x = int(np.argmax(counts))
    return x, counts[x] / C.size


def _char_reps_by_mass(mask: np.ndarray, group: GroupDescriptor, n: int) -> list[tuple[int, ...]]:
    spec = np.abs(fourier_transform(GroupFunction(group, mask.astype(float))).values)
    spec[0] = -1
    out, seen = [], set()
    for idx in np.argsort(-spec, kind="stable"):
        if spec[idx] <= 0 or len(out) >= n:
            break
        neg = int(group.neg_idx(int(idx)))
        rep = min(int(idx), neg)
        if rep in seen:
            continue
        seen.add(rep)
        out.append(tuple(int(c) for c in group.coords[rep]))
    return out


def stage2_bohr_increment(
    B: BohrSet,
    alpha: float,
    A_shift: np.ndarray,
    s1: Stage1Result,
    rho: float,
    delta2: float,
    search_budget: int,
    d_prime: int = 1,
    min_size: int = 1,
    allowed: np.ndarray | None = None,
    p: int = 2,
    n_guided: int = 8,
    widths: Sequence[float] = (0.25, 0.5, 1.0, 1.5),
    drc_samples: int = 2000,
    seed: int = 0,
) -> Stage2Result:
    if search_budget <= 0:
        raise SearchExhausted("stage-2 search budget is zero", None)
    g = B.group
    Bp, Bpp = s1.B_right, s1.B_left
    T = s1.T
    mu_a = np.count_nonzero(A_shift & Bp.mask) / Bp.size
    mu_t = np.count_nonzero(T) / Bp.size
    d1 = s1.bump

    # Hoelder front end on X1 = B''_rho, X2 = B'', Y = B'
    B3 = find_regular_dilate(dilate(Bpp, rho)).bohr
    holder: dict = {}
    inner_A = A_shift[g.add_idx(Bpp.members[:, None], Bp.members[None, :])].astype(float)
    inner_T = T[g.add_idx(B3.members[:, None], Bp.members[None, :])].astype(float)
    if inner_A.size * max(1, len(B3.members)) <= 2 * 10**9:
        M = inner_T @ inner_A.T / Bp.size
        holder["lhs"] = float(np.mean(M**p))
        holder["rhs"] = float((1 + d1 / 16) ** p * mu_a**p * mu_t**p)
        holder["holds"] = holder["lhs"] >= holder["rhs"]
    drc: dict = {}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = dependent_random_choice(
                g, A_shift, T, B3.mask, Bpp.mask, Bp.mask, p, max(delta2, 1e-9), mu_a * mu_t,
                sample_budget=drc_samples, seed=seed, enforce_floor=False,
            )
        drc = {"found": True, "product_density": float(res.product_density), "bad_probability": float(res.bad_probability)}
    except (PreconditionError, SearchExhausted) as exc:
        drc = {"found": False, "reason": str(exc)}

    # popular differences
    corr = shift_counts(T, A_shift, g) / Bp.size  # E_z A'(b+z) T(z)
    Gamma = Bpp.mask & (corr >= (1 + 0.9 * delta2) * mu_a * mu_t)
    target = (1 + delta2 / 20) * alpha
    max_rank = B.nontrivial_rank + d_prime
    checked = 0
    base = tuple(f for f in Bp.frequencies if any(f))

    def candidates(chars):
        for chi in chars:
            freqs = (base + (chi,))[-max_rank:] if max_rank else (chi,)
            for w in widths:
                yield BohrSet(g, freqs, w)

    def scan(sets_iter, label):
        nonlocal checked
        best = None
        for C in sets_iter:
            if checked >= search_budget:
                break
            checked += 1
            C = find_regular_dilate(C).bohr
            if C.size < min_size or not is_regular(C):
                continue
            x, dens = _best_shift(A_shift, C, allowed)
            if best is None or dens > best[2]:
                best = (C, x, dens)
        if best is not None and best[2] >= target:
            return Stage2Result(best[0], best[1], float(best[2]), target, label, int(Gamma.sum()), checked, holder, drc)
        return None

    guided = _char_reps_by_mass(Gamma, g, n_guided) if Gamma.any() else []
    out = scan(candidates(guided), "gamma-guided")
    if out:
        return out
    rng = np.random.default_rng(seed)
    reps = rng.integers(1, g.order, size=max(1, search_budget))
    chars = [tuple(int(c) for c in g.coords[r]) for r in reps]
    fallback = itertools.chain((dilate(Bp, 1.0), dilate(Bpp, 1.0), B3), candidates(chars))
    out = scan(fallback, "fallback")
    if out:
        return out
    raise SearchExhausted(f"no Bohr increment reaching {target:.6g} within {checked} candidates", target)


# -- configuration and the outer loop ----------------------------------------------------------

@dataclass(frozen=True)
class IncrementConfig:
    name: str = "desk"
    gamma: float = 0.25
    delta_spread: float = 0.5
    d_prime: int = 1
    r: float = 2.0
    shift_constant: float = 100.0
    rho: float | None = 0.25
    cascade_mode: str = "verified"
    scale_by_K: bool = False
    two_degenerate: bool = False
    p_cap: int = 4
    spread_budget: int = 2000
    stage2_budget: int = 200
    max_steps: int = 20
    seed: int = 0

    def to_json(self) -> dict:
        return asdict(self)


PRESETS = {
    "desk": IncrementConfig(),
    "theory": IncrementConfig(
        name="theory", gamma=0.01, delta_spread=0.01 / 80, d_prime=1, r=64.0, shift_constant=1 / 400,
        rho=None, cascade_mode="windowed", scale_by_K=True,
    ),
}


def admissible_shifts(system: LinearSystem, group: GroupDescriptor) -> np.ndarray:
    """Shifts s with (s, ..., s) in the image of the forms: translating A by s preserves the count.

    The image splits over the cyclic factors, and on Z_N the admissible shifts
    form the subgroup generated by the least divisor d of N with M x = (d, ..., d)
    solvable mod N.
    """
    rows = system.rows()
    steps = []
    for n in group.factors:
        steps.append(next(d for d in range(1, n + 1) if n % d == 0 and solve_congruence(rows, [d] * system.m, n) is not None))
    ok = np.all(group.coords % np.array(steps)[None, :] == 0, axis=1)
    return ok


@dataclass
class CountCertificate:
    t: float
    target: float
    alpha_star: float
    sizes: list[int]
    degenerate_bound: float
    nondegenerate_implied: bool
    transfers: bool
    claim_ok: bool | None = None


@dataclass
class TraceStep:
    index: int
    bohr: dict
    shift: int
    density: float
    factor: float
    trigger: str  # rectangle | low-degree | spreadness-violation
    mechanism: str
    constants: dict
    seconds: float = 0.0


@dataclass
class IncrementTrace:
    verdict: str  # CountWithinBand | BudgetExhausted | DensitySaturated
    reason: str
    initial_density: float
    steps: list[TraceStep]
    certificate: CountCertificate | None
    config: dict
    eps: float
    total_shift: int

    def densities(self) -> list[float]:
        return [self.initial_density] + [s.density for s in self.steps]

    def to_json(self, timings: bool = True) -> dict:
        steps = []
        for s in self.steps:
            d = asdict(s)
            sec = d.pop("seconds")
            if timings:
                d["timing"] = {"seconds": sec}
            steps.append(d)
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "initial_density": self.initial_density,
            "steps": steps,
            "certificate": asdict(self.certificate) if self.certificate else None,
            "config": self.config,
            "eps": self.eps,
            "total_shift": self.total_shift,
        }


def _certificate(t, target, alpha_star, sets_sizes, m, transfers, claim_ok=None) -> CountCertificate:
    bound = m * m / min(sets_sizes)
    return CountCertificate(t, target, alpha_star, list(sets_sizes), bound, t > bound, transfers, claim_ok)


def run_increment_loop(
    group: GroupDescriptor,
    A,
    system: LinearSystem,
    eps: float,
    config: IncrementConfig | None = None,
) -> IncrementTrace:
    cfg = config or PRESETS["desk"]
    if not is_binary(system):
        raise DomainError("the increment loop needs a binary system")
    check_coprime(system, group)
    m = system.m
    allowed = admissible_shifts(system, group)
    B = whole_group(group)
    cur = as_mask(group, A).copy()
    total = 0
    steps: list[TraceStep] = []
    alpha0 = np.count_nonzero(cur) / group.order

    def finish(verdict, reason, cert=None):
        return IncrementTrace(verdict, reason, alpha0, steps, cert, cfg.to_json(), eps, total)

    if alpha0 == 0:
        return finish("BudgetExhausted", "empty set")

    for step in range(cfg.max_steps + 1):
        started = time.perf_counter()
        alpha = np.count_nonzero(cur & B.mask) / B.size
        if alpha == 1:
            cert = _certificate(1.0, (1 - eps), 1.0, [B.size] * underlying_graph(system).k, m, bool(allowed[total]))
            return finish("CountWithinBand", "relative density 1", cert)
        if step == cfg.max_steps:
            break
        consts = {"alpha": alpha, "gamma": cfg.gamma, "delta_spread": cfg.delta_spread}

        def advance(newB: BohrSet, x: int, trigger: str, mechanism: str, extra: dict):
            nonlocal B, cur, total
            new = shifted(group, cur, x) & newB.mask
            dens = np.count_nonzero(new) / newB.size
            if not dens > alpha:
                raise InternalCheckError(f"{mechanism} step did not raise the density")
            steps.append(TraceStep(len(steps), newB.to_json(), int(x), float(dens), float(dens / alpha), trigger, mechanism, {**consts, **extra}, time.perf_counter() - started))
            B, cur = newB, new
            total = int(group.add_idx(total, x))

        try:
            spread = is_algebraically_spread(
                B, cur & B.mask, cfg.delta_spread, cfg.d_prime, cfg.r, cfg.spread_budget, seed=cfg.seed + step, allowed=allowed,
            )
            if not spread.spread:
                v = spread.violation
                advance(v.bohr, v.shift, "spreadness-violation", "spread-search", {"exhaustive": spread.exhaustive})
                continue
            cas = cascade_setup(
                B, system, cfg.gamma, alpha, cfg.two_degenerate, cfg.rho, cfg.cascade_mode, cfg.scale_by_K,
            )
            consts.update(rho=cas.rho, K=cas.K, rhos=list(cas.rhos))
            sel = uniform_shift_select(B, cur & B.mask, cas.family, cfg.gamma, rho=cas.rho, c=cfg.shift_constant, allowed=allowed)
            if sel.case == 2:
                advance(cas.family[sel.witness], sel.shift, "spreadness-violation", "shift-selection", {})
                continue
            A_shift = shifted(group, cur & B.mask, sel.shift)
            s1 = stage1_rectangle(B, A_shift, system, eps, cas, alpha, cfg.p_cap)
            shift_total = int(group.add_idx(total, sel.shift))
            if s1.kind == "certificate":
                total = shift_total
                cert = _certificate(s1.t, s1.target, alpha, [s.size for s in cas.sets], m, bool(allowed[total]), s1.claim_ok)
                return finish("CountWithinBand", f"count {s1.t:.6g} meets (1-eps)*alpha^m = {s1.target:.6g}", cert)
            if s1.kind == "failed":
                return finish("BudgetExhausted", f"stage 1: {s1.reason}")
            delta2 = s1.bump / 32
            if (1 + delta2 / 20) * alpha > 1:
                return finish("DensitySaturated", "the next increment target exceeds density 1")
            min_size = math.ceil(2.0 ** (-cfg.r) * B.size - 1e-9)
            s2 = stage2_bohr_increment(
                B, alpha, A_shift, s1, cas.rho, delta2, cfg.stage2_budget, cfg.d_prime, min_size, allowed, seed=cfg.seed + step,
            )
            # the Bohr increment is stated for A' = A + x_sel; compose the shifts
            cur = A_shift
            total_before = total
            total = shift_total
            try:
                advance(s2.bohr, s2.shift, "rectangle", s2.mechanism, {"selection_shift": int(sel.shift), "delta1": s1.bump, "delta2": delta2, "edge": list(s1.edge), "drc": s2.drc, "holder": s2.holder})
            except InternalCheckError:
                total = total_before
                raise
        except CascadeError as exc:
            return finish("BudgetExhausted", f"cascade: {exc}")
        except SearchExhausted as exc:
            return finish("BudgetExhausted", f"search: {exc}")
        except PatternLabError as exc:
            return finish("BudgetExhausted", f"{type(exc).__name__}: {exc}")
    return finish("BudgetExhausted", f"step budget {cfg.max_steps} reached")
