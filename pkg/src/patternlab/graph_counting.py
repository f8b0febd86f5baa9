"""Homomorphism densities in multipartite graphs, grid norms, and counting diagnostics.

Tables are dense 2-D arrays: the table of an oriented edge (u, v) has rows
indexed by part X_u and columns by part X_v.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .config import check_budget, enumeration_cap
from .elimination import eliminate
from .errors import InternalCheckError, PreconditionError, ResourceError, StructuralError
from .linear_systems import OrientedGraph

Edge = tuple[int, int]
TOL = 1e-12


@dataclass(frozen=True, eq=False)
class AdjacencyFunction:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or 0 in v.shape:
            raise StructuralError("adjacency tables must be non-empty 2-D arrays")
        if v.min() < -TOL or v.max() > 1 + TOL:
            raise StructuralError("adjacency values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def left_size(self) -> int:
        return self.values.shape[0]

    @property
    def right_size(self) -> int:
        return self.values.shape[1]

    @property
    def density(self) -> float:
        return float(self.values.mean())

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.values == 0) | (self.values == 1)))


def _table(x) -> np.ndarray:
    return x.values if isinstance(x, AdjacencyFunction) else np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Rectangle:
    S: tuple[int, ...]
    T: tuple[int, ...]
    left_size: int
    right_size: int

    def __post_init__(self):
        if not self.S or not self.T:
            raise StructuralError("rectangle sides must be non-empty")

    @classmethod
    def from_masks(cls, s_mask: np.ndarray, t_mask: np.ndarray) -> "Rectangle":
        return cls(
            tuple(int(i) for i in np.flatnonzero(s_mask)),
            tuple(int(i) for i in np.flatnonzero(t_mask)),
            len(s_mask),
            len(t_mask),
        )

    @property
    def measure(self) -> float:
        return len(self.S) * len(self.T) / (self.left_size * self.right_size)

    def density(self, table) -> float:
        t = _table(table)
        return float(t[np.ix_(self.S, self.T)].mean())

    def s_mask(self) -> np.ndarray:
        m = np.zeros(self.left_size, dtype=bool)
        m[list(self.S)] = True
        return m

    def t_mask(self) -> np.ndarray:
        m = np.zeros(self.right_size, dtype=bool)
        m[list(self.T)] = True
        return m


@dataclass(frozen=True, eq=False)
class RectangleMixture:
    """F = sum_i w_i 1_{S_i x T_i}.

    Side masks are stored once and referenced by index.  ``null_weight`` is
    the mass on the empty rectangle, so weights plus null weight sum to one.
    """

    s_masks: np.ndarray  # (u, |X|) bool
    t_masks: np.ndarray  # (v, |Y|) bool
    s_index: np.ndarray  # (n,) int
    t_index: np.ndarray  # (n,) int
    weights: np.ndarray  # (n,) float

    @classmethod
    def from_rectangles(cls, items: Sequence[tuple[float, Rectangle]]) -> "RectangleMixture":
        if not items:
            raise StructuralError("empty mixture")
        s = np.array([r.s_mask() for _, r in items])
        t = np.array([r.t_mask() for _, r in items])
        n = len(items)
        return cls(s, t, np.arange(n), np.arange(n), np.array([w for w, _ in items], dtype=float))

    def __post_init__(self):
        if np.any(self.weights < 0):
            raise StructuralError("mixture weights must be non-negative")
        if self.weights.sum() > 1 + 1e-9:
            raise StructuralError("mixture weights exceed total mass 1")

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def null_weight(self) -> float:
        return max(0.0, 1.0 - float(self.weights.sum()))

    @property
    def left_size(self) -> int:
        return self.s_masks.shape[1]

    @property
    def right_size(self) -> int:
        return self.t_masks.shape[1]

    def side_sizes(self) -> tuple[np.ndarray, np.ndarray]:
        return self.s_masks.sum(axis=1)[self.s_index], self.t_masks.sum(axis=1)[self.t_index]

    def measures(self) -> np.ndarray:
        s, t = self.side_sizes()
        return s * t / (self.left_size * self.right_size)

    def l1_norm(self) -> float:
        return float(np.dot(self.weights, self.measures()))

    def rectangle_sums(self, D: np.ndarray) -> np.ndarray:
        """sum of D over each rectangle in the mixture."""
        DS = self.s_masks.astype(float) @ D  # (u, |Y|)
        nu, nv = len(self.s_masks), len(self.t_masks)
        if nu * nv <= 4 * 10**6:
            M = DS @ self.t_masks.T.astype(float)
            return M[self.s_index, self.t_index]
        return np.einsum("ij,ij->i", DS[self.s_index], self.t_masks[self.t_index].astype(float))

    def pair_with(self, D: np.ndarray) -> float:
        return float(np.dot(self.weights, self.rectangle_sums(D))) / (self.left_size * self.right_size)

    def rectangle(self, i: int) -> Rectangle:
        return Rectangle.from_masks(self.s_masks[self.s_index[i]], self.t_masks[self.t_index[i]])

    def dense(self) -> np.ndarray:
        out = np.zeros((self.left_size, self.right_size))
        for i in range(len(self)):
            out += self.weights[i] * np.outer(self.s_masks[self.s_index[i]], self.t_masks[self.t_index[i]])
        return out


@dataclass
class Diagnosis:
    variant: str  # WithinBand | DenseRectangle | LowDegreeSet | Indeterminate
    edge: Edge | None = None
    rectangle: Rectangle | None = None
    vertex_set: tuple[int, ...] | None = None
    p: int | None = None
    delta: float | None = None
    claimed: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


# -- homomorphism densities ---------------------------------------------------

def part_sizes(H: OrientedGraph, tables: Mapping[Edge, object]) -> list[int]:
    sizes: list[int | None] = [None] * H.k
    for e in H.edges:
        if e not in tables:
            raise StructuralError(f"missing table for edge {e}")
        t = _table(tables[e])
        for v, n in zip(e, t.shape):
            if sizes[v] is None:
                sizes[v] = n
            elif sizes[v] != n:
                raise StructuralError(f"inconsistent part size at vertex {v}")
    return [1 if s is None else s for s in sizes]


def hom_total(H: OrientedGraph, tables: Mapping[Edge, object], sizes: Sequence[int] | None = None) -> float:
    """Sum over all vertex maps of the product of edge values."""
    if sizes is None:
        sizes = part_sizes(H, tables)
    factors = [(e, _table(tables[e])) for e in H.edges]
    return eliminate(list(sizes), factors)


def hom_density(H: OrientedGraph, tables: Mapping[Edge, object], sizes: Sequence[int] | None = None) -> float:
    if sizes is None:
        sizes = part_sizes(H, tables)
    if H.m == 0:
        return 1.0
    return hom_total(H, tables, sizes) / math.prod(sizes)


# -- grid norms ----------------------------------------------------------------

def _tuple_moment(F: np.ndarray, r: int, power: int, cap: int) -> float:
    """E over column r-tuples of (E_rows prod_j F[:, t_j])^power."""
    rows, cols = F.shape
    check_budget(cols**r * rows, "grid-norm tuple enumeration", cap)
    total = 0.0
    count = cols**r
    step = max(1, (1 << 20) // max(1, rows))
    for start in range(0, count, step):
        flat = np.arange(start, min(count, start + step), dtype=np.int64)
        prod = np.ones((rows, flat.size))
        for _ in range(r):
            prod *= F[:, flat % cols]
            flat //= cols
        total += float(np.sum(prod.mean(axis=0) ** power))
    return total / count


def grid_u(f, k: int, p: int, absolute: bool = False, cap: int | None = None) -> float:
    """U_{k,p}(f) = E_{y_1..y_p} (E_x prod_j f(x, y_j))^k."""
    F = _table(f)
    if absolute:
        F = np.abs(F)
    if k < 1 or p < 1:
        raise ValueError("k and p must be positive")
    cap = enumeration_cap() if cap is None else cap
    X, Y = F.shape
    # the same expectation can be taken over x-tuples; pick the cheaper side
    if k == 2 and X * X * Y <= cap:
        gram = F @ F.T / Y
        return float(np.mean(gram**p))
    if p == 2 and Y * Y * X <= cap:
        gram = F.T @ F / X
        return float(np.mean(gram**k))
    if Y**p * X <= X**k * Y:
        return _tuple_moment(F, p, k, cap)
    return _tuple_moment(F.T, k, p, cap)


def grid_norm(f, k: int, p: int, absolute: bool = False, cap: int | None = None) -> float:
    return abs(grid_u(f, k, p, absolute, cap)) ** (1.0 / (p * k))


def g_circ_g(g) -> np.ndarray:
    G = _table(g)
    return G @ G.T / G.shape[1]


def lp_norm(values, p: float) -> float:
    v = np.abs(np.asarray(values, dtype=float))
    return float(np.mean(v**p) ** (1.0 / p))


# -- rectangle extraction -------------------------------------------------------

@dataclass(frozen=True)
class SoftRectResult:
    rectangle: Rectangle
    index: int
    mean: float
    measure: float
    tau: float
    pairing: float


def soft_rect_extract(D, F: RectangleMixture, eps: float, Delta: float, gamma: float, direction: str) -> SoftRectResult:
    D = _table(D)
    if direction not in ("above", "below"):
        raise ValueError("direction must be 'above' or 'below'")
    if D.shape != (F.left_size, F.right_size):
        raise StructuralError("D and the mixture live on different grids")
    if not (0 < eps <= 1) or gamma <= 0 or Delta < 1:
        raise PreconditionError("need 0 < eps <= 1, gamma > 0, Delta >= 1")
    if D.min() < 0:
        raise PreconditionError("D must be non-negative")
    if D.max() > Delta + TOL:
        raise PreconditionError(f"||D||_inf = {D.max()} exceeds Delta = {Delta}")
    norm = F.l1_norm()
    if norm < gamma - TOL:
        raise PreconditionError(f"||F||_1 = {norm} < gamma = {gamma}")
    pairing = F.pair_with(D) / norm
    if direction == "above" and not pairing >= 1 + eps - TOL:
        raise PreconditionError(f"<F/||F||_1, D> = {pairing} < 1 + eps")
    if direction == "below" and not pairing <= 1 - eps + TOL:
        raise PreconditionError(f"<F/||F||_1, D> = {pairing} > 1 - eps")

    tau = eps * gamma / (4 * Delta)
    s_sizes, t_sizes = F.side_sizes()
    cells = s_sizes * t_sizes
    measures = cells / (F.left_size * F.right_size)
    means = F.rectangle_sums(D) / cells
    alive = measures >= tau * (1 - 1e-12)
    if direction == "above":
        ok = alive & (means >= 1 + eps / 2)
    else:
        ok = alive & (means <= 1 - eps / 2)
    if not ok.any():
        raise InternalCheckError("no surviving rectangle carries the deviation")
    dev = np.where(ok, np.abs(means - 1), -np.inf)
    best = int(np.flatnonzero(dev == dev.max())[0])
    return SoftRectResult(F.rectangle(best), best, float(means[best]), float(measures[best]), tau, pairing)


# -- low-discrepancy location ------------------------------------------------------

@dataclass
class LowDiscResult:
    within_band: bool
    t: float
    product: float
    edge: Edge | None = None
    rectangle: Rectangle | None = None
    direction: str | None = None
    density: float | None = None
    alpha_edge: float | None = None
    measure: float | None = None
    density_bound: float | None = None
    measure_bound: float | None = None
    peeled: int = 0
    mixture_size: int = 0

    def verify(self, tables: Mapping[Edge, object]) -> bool:
        if self.within_band:
            return True
        dens = self.rectangle.density(tables[self.edge])
        if self.direction == "above":
            ok = dens >= self.density_bound - 1e-12
        else:
            ok = dens <= self.density_bound + 1e-12
        return ok and self.rectangle.measure >= self.measure_bound * (1 - 1e-12)


def _check_binary(tables: Mapping[Edge, object], H: OrientedGraph) -> None:
    for e in H.edges:
        t = _table(tables[e])
        if not np.all((t == 0) | (t == 1)):
            raise PreconditionError(f"table of edge {e} is not 0/1-valued")


def build_mixture(
    H: OrientedGraph,
    tables: Mapping[Edge, object],
    edge: Edge,
    sizes: Sequence[int],
    cap: int | None = None,
) -> RectangleMixture:
    """The marginal of prod_{e != edge} A_e on X_u x X_v as a rectangle mixture.

    One rectangle per assignment of the vertices adjacent to u or v; the
    remaining variables are summed out into the weights.
    """
    cap = enumeration_cap() if cap is None else cap
    u0, v0 = edge
    rest_edges = [e for e in H.edges if e != edge]
    x_side = [e for e in rest_edges if u0 in e]
    y_side = [e for e in rest_edges if v0 in e and u0 not in e]
    other = [e for e in rest_edges if u0 not in e and v0 not in e]

    def partner(e, v):
        return e[1] if e[0] == v else e[0]

    Nu = sorted({partner(e, u0) for e in x_side} - {v0})
    Nv = sorted({partner(e, v0) for e in y_side} - {u0})
    N = sorted(set(Nu) | set(Nv))
    n_sizes = [sizes[w] for w in N]
    total = math.prod(n_sizes)
    check_budget(total * (sizes[u0] + sizes[v0]), "rectangle mixture", cap)

    def side_masks(side_edges, centre, nbrs):
        masks = np.ones((1, sizes[centre]), dtype=bool)
        shape = []
        for w in nbrs:
            col = np.ones((sizes[w], sizes[centre]), dtype=bool)
            for e in side_edges:
                if partner(e, centre) != w:
                    continue
                t = _table(tables[e]).astype(bool)
                col &= t.T if e[0] == centre else t
            masks = (masks[:, None, :] & col[None, :, :]).reshape(-1, sizes[centre])
            shape.append(sizes[w])
        return masks, shape

    s_all, _ = side_masks(x_side, u0, Nu)
    t_all, _ = side_masks(y_side, v0, Nv)
    s_unique, s_inv = np.unique(s_all, axis=0, return_inverse=True)
    t_unique, t_inv = np.unique(t_all, axis=0, return_inverse=True)
    s_inv = s_inv.reshape(-1)
    t_inv = t_inv.reshape(-1)

    factors = [(e, _table(tables[e])) for e in other]
    outside = math.prod(sizes[v] for v in range(len(sizes)) if v not in N)
    if N:
        W = eliminate(list(sizes), factors, keep=tuple(N)) / outside if factors else np.ones(n_sizes)
        W = np.asarray(W, dtype=float).reshape(-1)
        grids = np.unravel_index(np.arange(total), n_sizes)
        pos = {w: i for i, w in enumerate(N)}

        def part(nbrs):
            if not nbrs:
                return np.zeros(total, dtype=np.int64)
            return np.ravel_multi_index([grids[pos[w]] for w in nbrs], [sizes[w] for w in nbrs])

        keys = s_inv[part(Nu)] * len(t_unique) + t_inv[part(Nv)]
    else:
        # nothing to condition on: F is constant on the whole grid
        W = np.array([eliminate(list(sizes), factors) / outside if factors else 1.0])
        keys = np.array([0])
    sums = np.bincount(keys, weights=W, minlength=len(s_unique) * len(t_unique)) / total
    keep = np.flatnonzero(sums > 0)
    si, ti = keep // len(t_unique), keep % len(t_unique)
    nonempty = (s_unique[si].any(axis=1)) & (t_unique[ti].any(axis=1))
    keep, si, ti = keep[nonempty], si[nonempty], ti[nonempty]
    return RectangleMixture(s_unique, t_unique, si, ti, sums[keep])


def _band(m: int, product: float, eps: float) -> tuple[float, float]:
    return (1 - eps) ** m * product, (1 + eps) ** m * product


def low_disc_locate(
    H: OrientedGraph,
    tables: Mapping[Edge, object],
    eps: float,
    alpha_floor: float = 0.0,
    cap: int | None = None,
) -> LowDiscResult:
    if not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    sizes = part_sizes(H, tables)
    _check_binary(tables, H)
    alphas = {e: float(_table(tables[e]).mean()) for e in H.edges}
    for e, a in alphas.items():
        if a <= 0 or a < alpha_floor:
            raise PreconditionError(f"edge {e} has density {a} below the floor")
    product = math.prod(alphas.values())
    t = hom_density(H, tables, sizes)
    lo, hi = _band(H.m, product, eps)
    if lo - TOL <= t <= hi + TOL:
        return LowDiscResult(True, t, product)
    above = t > hi
    direction = "above" if above else "below"
    alpha = min(alphas.values())
    m = H.m

    current, t_cur, peeled = H, t, 0
    while True:
        e0 = current.edges[-1]
        reduced = current.without_edge(e0)
        t_red = hom_density(reduced, tables, sizes)
        prod_red = math.prod(alphas[e] for e in reduced.edges)
        lo_r, hi_r = _band(reduced.m, prod_red, eps)
        if reduced.m >= 1 and ((above and t_red > hi_r) or (not above and t_red < lo_r)):
            current, t_cur, peeled = reduced, t_red, peeled + 1
            continue
        break

    F = build_mixture(current, tables, e0, sizes, cap)
    a0 = alphas[e0]
    A0 = _table(tables[e0])
    norm = F.l1_norm()
    if abs(norm - t_red) > 1e-9 * max(1.0, t_red) or abs(F.pair_with(A0) - t_cur) > 1e-9:
        raise InternalCheckError("rectangle mixture does not reproduce the reduced count")
    res = soft_rect_extract(A0 / a0, F, eps, 1 / a0, norm, direction)
    if above:
        dbound = (1 + eps / 2) * a0
        mbound = eps * alpha ** (m + 1) / 4
    else:
        dbound = (1 - eps / 2) * a0
        mbound = eps * (1 - eps) ** (m - 1) * alpha**m / 4
    out = LowDiscResult(
        False, t, product, e0, res.rectangle, direction, res.rectangle.density(A0), a0,
        res.rectangle.measure, dbound, mbound, peeled, len(F),
    )
    if not out.verify(tables):
        raise InternalCheckError("returned rectangle fails the stated bounds")
    return out


# -- centred norms, technical branch, main diagnosis -------------------------------------

@dataclass(frozen=True)
class SplitResult:
    case: str  # "dense" (values above the mean) or "sparse"
    members: tuple[int, ...]
    density: float
    threshold: float
    required_density: float


def centered_norm_split(f, p: int, eps: float) -> SplitResult:
    f = np.asarray(f, dtype=float)
    if f.min() < -TOL or f.max() > 1 + TOL:
        raise PreconditionError("values must lie in [0, 1]")
    alpha = float(f.mean())
    dev = lp_norm(f - alpha, p)
    if not dev >= eps * alpha - TOL or dev == 0:
        raise PreconditionError(f"||f - alpha||_p = {dev} < eps*alpha = {eps * alpha}")
    cands = _split_candidates(f, p, eps)
    for c in cands:
        if c.density >= c.required_density - TOL:
            return c
    raise InternalCheckError("neither side of the centred-norm split is large")


def _split_candidates(f: np.ndarray, p: int, eps: float) -> list[SplitResult]:
    alpha = float(f.mean())
    hi = alpha * (1 + eps / 4)
    lo = alpha * (1 - eps / 4)
    plus = np.flatnonzero(f > hi)
    minus = np.flatnonzero(f < lo)
    n = len(f)
    return [
        SplitResult("dense", tuple(int(i) for i in plus), len(plus) / n, hi, eps**p * alpha**p / 4),
        SplitResult("sparse", tuple(int(i) for i in minus), len(minus) / n, lo, eps**p / 4),
    ]


@dataclass
class EdgeReport:
    edge: Edge
    alpha: float
    grid_norm: float | None
    grid_fires: bool
    row_norm: float
    row_fires: bool
    reason: str = ""


@dataclass
class TechnicalReport:
    p: int
    p_full: int
    capped: bool
    delta: float
    k_grid: int
    edges: list[EdgeReport]
    status: str  # fired | indeterminate | none_fired

    @property
    def fired(self) -> list[EdgeReport]:
        return [r for r in self.edges if r.grid_fires or r.row_fires]


def branch_delta(eps: float, m: int) -> float:
    return eps**2 * 2.0 ** (-4 * m - 10)


def count_deviation(H: OrientedGraph, tables) -> tuple[float, float, dict]:
    alphas = {e: float(_table(tables[e]).mean()) for e in H.edges}
    return hom_density(H, tables), math.prod(alphas.values()), alphas


def technical_branch(H: OrientedGraph, tables: Mapping[Edge, object], eps: float, p_cap: int = 4, cap: int | None = None) -> TechnicalReport:
    _check_binary(tables, H)
    t, product, alphas = count_deviation(H, tables)
    if min(alphas.values()) <= 0:
        raise PreconditionError("every edge needs positive density")
    if not abs(t - product) >= eps * product - TOL:
        raise PreconditionError(f"|t - prod alpha| = {abs(t - product)} < eps * prod alpha")
    m = H.m
    alpha = min(alphas.values())
    p_full = 2 * m * math.ceil(math.log2(2 / alpha))
    p = min(p_cap, p_full)
    delta = branch_delta(eps, m)
    k_grid = max(2, 2 * (H.d_in - 1))
    reports = []
    indeterminate = False
    for e in H.edges:
        A = _table(tables[e])
        a = alphas[e]
        rows = A.mean(axis=1)
        row_norm = lp_norm(rows - a, p)
        row_fires = row_norm >= delta * a
        try:
            gn = grid_norm(A, k_grid, p, cap=cap)
            reason = ""
        except ResourceError as exc:
            gn, reason = None, str(exc)
            indeterminate = True
        reports.append(EdgeReport(e, a, gn, gn is not None and gn >= (1 + delta) * a, row_norm, row_fires, reason))
    fired = any(r.grid_fires or r.row_fires for r in reports)
    status = "fired" if fired else ("indeterminate" if indeterminate or p < p_full else "none_fired")
    return TechnicalReport(p, p_full, p < p_full, delta, k_grid, reports, status)


def main_count_diagnose(
    H: OrientedGraph,
    tables: Mapping[Edge, object],
    eps: float,
    p_cap: int = 4,
    cap: int | None = None,
) -> Diagnosis:
    _check_binary(tables, H)
    t, product, alphas = count_deviation(H, tables)
    constants = {"eps": eps, "p_cap": p_cap, "t": t, "product": product}
    if abs(t - product) < eps * product:
        return Diagnosis("WithinBand", constants=constants)
    rep = technical_branch(H, tables, eps, p_cap, cap)
    delta, p, k = rep.delta, rep.p, rep.k_grid
    constants.update(delta=delta, p=p, p_full=rep.p_full, k_grid=k, status=rep.status)
    under = t < product
    notes: list[str] = []
    for r in rep.fired:
        A = _table(tables[r.edge])
        a = r.alpha
        routes = []
        if r.grid_fires:
            routes.append("grid")
        if r.row_fires:
            routes.append("rows")
        if under:
            routes.sort(key=lambda x: x != "rows")
        for route in routes:
            if route == "rows":
                diag = _rows_route(A, a, p, delta, r.edge, under)
            else:
                try:
                    diag = _grid_route(A, a, k, p, delta, r.edge, cap)
                except ResourceError as exc:
                    notes.append(f"edge {r.edge}: grid route skipped ({exc})")
                    continue
            if diag is not None:
                diag.p, diag.delta = p, delta
                diag.constants = constants
                diag.notes = notes
                if not verify_diagnosis(diag, tables):
                    raise InternalCheckError("diagnosis witness failed re-verification")
                return diag
    notes.append(f"technical branch status: {rep.status}")
    return Diagnosis("Indeterminate", p=p, delta=delta, constants=constants, notes=notes)


def _rows_route(A: np.ndarray, a: float, p: int, delta: float, edge: Edge, prefer_sparse: bool) -> Diagnosis | None:
    rows = A.mean(axis=1)
    cands = _split_candidates(rows, p, delta)
    if prefer_sparse:
        cands = cands[::-1]
    for c in cands:
        if not c.members or c.density < c.required_density - TOL:
            continue
        if c.case == "dense":
            rect = Rectangle(c.members, tuple(range(A.shape[1])), A.shape[0], A.shape[1])
            return Diagnosis(
                "DenseRectangle", edge, rect,
                claimed={"density_at_least": (1 + delta / 4) * a, "measure_at_least": c.required_density, "alpha": a},
            )
        return Diagnosis(
            "LowDegreeSet", edge, vertex_set=c.members,
            claimed={"row_density_at_most": (1 - delta / 4) * a, "set_density_at_least": c.required_density, "alpha": a},
        )
    return None


def _grid_route(A: np.ndarray, a: float, k: int, p: int, delta: float, edge: Edge, cap) -> Diagnosis | None:
    K = OrientedGraph.complete_bipartite(k, p)
    tables = {e: A for e in K.edges}
    res = low_disc_locate(K, tables, delta, cap=cap)
    if res.within_band or res.direction != "above":
        return None
    return Diagnosis(
        "DenseRectangle", edge, res.rectangle,
        claimed={
            "density_at_least": (1 + delta / 2) * a,
            "measure_at_least": delta * a ** (k * p + 1) / 4,
            "alpha": a,
        },
    )


def verify_diagnosis(diag: Diagnosis, tables: Mapping[Edge, object]) -> bool:
    if diag.variant in ("WithinBand", "Indeterminate"):
        return True
    A = _table(tables[diag.edge])
    c = diag.claimed
    if diag.variant == "DenseRectangle":
        r = diag.rectangle
        return r.density(A) >= c["density_at_least"] - 1e-12 and r.measure >= c["measure_at_least"] * (1 - 1e-12)
    rows = A.mean(axis=1)
    S = list(diag.vertex_set)
    return bool(np.all(rows[S] <= c["row_density_at_most"] + 1e-12)) and len(S) / len(rows) >= c["set_density_at_least"] - 1e-12


# -- uplift checks ---------------------------------------------------------------------

@dataclass(frozen=True)
class UpliftResult:
    lhs: float
    rhs: float
    passed: bool
    exponent: int


def psd_uplift_check(g, p: int, eps: float) -> UpliftResult:
    G = _table(g)
    if not 0 < eps <= 0.5:
        raise PreconditionError("eps must lie in (0, 1/2]")
    scale = max(1.0, float(np.abs(G).max()))
    if np.abs(G.mean(axis=1)).max() > 1e-12 * scale:
        raise PreconditionError("rows of g must have mean zero")
    norm_sq = lp_norm(g_circ_g(G), p)
    if not norm_sq >= eps - TOL:
        raise PreconditionError(f"||g||^2_U(2,{p}) = {norm_sq} < eps = {eps}")
    p_prime = 2 * math.ceil(p / eps)
    if p_prime % 2:
        p_prime += 1
    gram = g_circ_g(1 + G)
    lhs = float(np.mean(gram**p_prime)) ** (1 / (2 * p_prime))
    rhs = 1 + eps / 5
    return UpliftResult(lhs, rhs, lhs >= rhs, p_prime)


def odd_moment_uplift_check(f, k0: int, eps: float, odd_cap: int | None = None) -> UpliftResult:
    f = np.asarray(f, dtype=float)
    if not 0 < eps <= 0.5:
        raise PreconditionError("eps must lie in (0, 1/2]")
    k_prime = math.ceil(2 * k0 / eps)
    odd_cap = k_prime if odd_cap is None else odd_cap
    centred = f - 1
    for k in range(1, odd_cap + 1, 2):
        if np.mean(centred**k) < -1e-12:
            raise PreconditionError(f"odd moment E(f-1)^{k} is negative")
    if not lp_norm(centred, k0) >= eps - TOL or not np.any(centred):
        raise PreconditionError(f"||f - 1||_{k0} < eps")
    lhs = lp_norm(f, k_prime)
    rhs = 1 + eps / 2
    return UpliftResult(lhs, rhs, lhs >= rhs, k_prime)
