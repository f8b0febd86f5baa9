"""Systems of integer linear forms, their underlying graphs, and exact pattern counts."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .config import check_budget
from .elimination import EXACT_FLOAT_LIMIT, eliminate
from .errors import DomainError, ResourceError, StructuralError
from .groups import GroupDescriptor
from .modlinalg import in_rational_span, rank_mod, solve_congruence


@dataclass(frozen=True)
class LinearForm:
    coeffs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        if not self.coeffs:
            raise StructuralError("a linear form needs at least one variable")
        if not any(self.coeffs):
            raise StructuralError("the zero form is not allowed")

    @property
    def d(self) -> int:
        return len(self.coeffs)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.coeffs) if c)

    def __str__(self) -> str:
        return " ".join(str(c) for c in self.coeffs)


@dataclass(frozen=True)
class LinearSystem:
    forms: tuple[LinearForm, ...]
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        forms = tuple(f if isinstance(f, LinearForm) else LinearForm(tuple(f)) for f in self.forms)
        object.__setattr__(self, "forms", forms)
        if not forms:
            raise StructuralError("a system needs at least one form")
        if len({f.d for f in forms}) != 1:
            raise StructuralError("all forms must have the same number of variables")
        if len(set(forms)) != len(forms):
            raise StructuralError("forms must be distinct coefficient vectors")

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]]) -> "LinearSystem":
        return cls(tuple(LinearForm(tuple(r)) for r in rows))

    @property
    def d(self) -> int:
        return self.forms[0].d

    @property
    def m(self) -> int:
        return len(self.forms)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([f.coeffs for f in self.forms], dtype=np.int64)

    def rows(self) -> list[list[int]]:
        return [list(f.coeffs) for f in self.forms]

    def to_text(self) -> str:
        return f"d={self.d}\n" + "\n".join(str(f) for f in self.forms) + "\n"


# -- standard systems -------------------------------------------------------

def ap_system(k: int) -> LinearSystem:
    """k-term progressions (x, x+y, ..., x+(k-1)y)."""
    return LinearSystem.from_rows([(1, t) for t in range(k)])


def ap3_binary() -> LinearSystem:
    """3-term progressions as a binary system: (2x-2y, x-z, 2y-2z)."""
    return LinearSystem.from_rows([(2, -2, 0), (1, 0, -1), (0, 2, -2)])


def clique_system(r: int) -> LinearSystem:
    rows = []
    for i, j in itertools.combinations(range(r), 2):
        row = [0] * r
        row[i] = row[j] = 1
        rows.append(row)
    return LinearSystem.from_rows(rows)


# -- underlying graph ---------------------------------------------------------

@dataclass(frozen=True)
class OrientedGraph:
    k: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        edges = tuple((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        if len(set(edges)) != len(edges):
            raise StructuralError("repeated edge")
        for u, v in edges:
            if not (0 <= u < v < self.k):
                raise StructuralError(f"edge {(u, v)} must satisfy 0 <= u < v < k")

    @property
    def m(self) -> int:
        return len(self.edges)

    def indegree(self, v: int) -> int:
        return sum(1 for _, b in self.edges if b == v)

    @property
    def d_in(self) -> int:
        return max((self.indegree(v) for v in range(self.k)), default=0)

    def degree(self, v: int) -> int:
        return sum(1 for e in self.edges if v in e)

    @property
    def d1(self) -> int:
        return sum(1 for v in range(self.k) if self.degree(v) == 1)

    @property
    def kappa(self) -> int:
        return 2 * self.m - self.d1

    def neighbours(self, v: int) -> set[int]:
        return {b if a == v else a for a, b in self.edges if v in (a, b)}

    def without_edge(self, e: tuple[int, int]) -> "OrientedGraph":
        return OrientedGraph(self.k, tuple(x for x in self.edges if x != e))

    @classmethod
    def complete_bipartite(cls, left: int, right: int) -> "OrientedGraph":
        return cls(left + right, tuple((i, left + j) for i in range(left) for j in range(right)))

    @classmethod
    def triangle(cls) -> "OrientedGraph":
        return cls(3, ((0, 1), (0, 2), (1, 2)))

    @classmethod
    def path(cls, n_vertices: int) -> "OrientedGraph":
        return cls(n_vertices, tuple((i, i + 1) for i in range(n_vertices - 1)))


def is_binary(sys: LinearSystem) -> bool:
    supports = [f.support for f in sys.forms]
    return all(len(s) == 2 for s in supports) and len(set(supports)) == len(supports)


def underlying_graph(sys: LinearSystem) -> OrientedGraph:
    if not is_binary(sys):
        raise DomainError("underlying graph is defined only for binary systems")
    return OrientedGraph(sys.d, tuple(f.support for f in sys.forms))


def edge_coefficients(sys: LinearSystem) -> dict[tuple[int, int], tuple[int, int]]:
    """Edge (a, b) -> (lambda, eta) with form lambda*x_a + eta*x_b."""
    g = underlying_graph(sys)
    return {e: (f.coeffs[e[0]], f.coeffs[e[1]]) for e, f in zip(g.edges, sys.forms)}


def degeneracy_ordering(H: OrientedGraph, k: int) -> list[int] | None:
    remaining = set(range(H.k))
    adj = {v: H.neighbours(v) for v in range(H.k)}
    removal = []
    while remaining:
        # ties broken towards the largest label so edgeless graphs give the identity
        v = min(remaining, key=lambda u: (len(adj[u] & remaining), -u))
        if len(adj[v] & remaining) > k:
            return None
        removal.append(v)
        remaining.remove(v)
    return removal[::-1]


def translation_closure(sys: LinearSystem) -> LinearSystem:
    return LinearSystem.from_rows([list(f.coeffs) + [1] for f in sys.forms])


# -- enumeration ---------------------------------------------------------------

def as_mask(group: GroupDescriptor, A) -> np.ndarray:
    """Accept a boolean mask, an index collection, or coordinate tuples."""
    if isinstance(A, np.ndarray) and A.dtype == bool:
        if A.shape != (group.order,):
            raise StructuralError("set mask length does not match the group order")
        return A
    mask = np.zeros(group.order, dtype=bool)
    items = list(A)
    if not items:
        return mask
    if isinstance(items[0], (tuple, list)):
        mask[group.index_of(np.array(items))] = True
    else:
        mask[np.asarray(items, dtype=np.int64)] = True
    return mask


def _form_images(group: GroupDescriptor, coeffs: np.ndarray, digits: np.ndarray) -> np.ndarray:
    """digits: (d, n) element indices; returns (m, n) image indices."""
    m, d = coeffs.shape
    if group.is_cyclic_single:
        N = group.factors[0]
        return (coeffs % N) @ digits % N
    if group.order <= 2048:
        table = _addition_table(group)
        out = np.empty((m, digits.shape[1]), dtype=np.int64)
        for i in range(m):
            acc = group.scale_map(coeffs[i, 0])[digits[0]]
            for j in range(1, d):
                acc = table[acc, group.scale_map(coeffs[i, j])[digits[j]]]
            out[i] = acc
        return out
    out = np.zeros((m, digits.shape[1]), dtype=np.int64)
    for k, (N, stride) in enumerate(zip(group.factors, group.strides)):
        ck = group.coords[:, k][digits]  # (d, n)
        out += ((coeffs % N) @ ck % N) * int(stride)
    return out


_ADD_TABLES: dict = {}


def _addition_table(group: GroupDescriptor) -> np.ndarray:
    if group not in _ADD_TABLES:
        idx = np.arange(group.order)
        _ADD_TABLES[group] = group.add_idx(idx[:, None], idx[None, :]).astype(np.int32)
    return _ADD_TABLES[group]


def _digits(start: int, stop: int, n: int, d: int) -> np.ndarray:
    flat = np.arange(start, stop, dtype=np.int64)
    out = np.empty((d, flat.size), dtype=np.int64)
    for j in range(d - 1, -1, -1):
        out[j] = flat % n
        flat //= n
    return out


def image_chunks(group: GroupDescriptor, sys: LinearSystem, chunk: int = 1 << 18):
    """Yield (start, images) over G^d in lexicographic order (x_1 most significant).

    The trailing variables form a precomputed block; leading variables are
    added as offsets, so each chunk costs one combine per form.
    """
    m = sys.m
    for start, offs, block in _chunk_parts(group, sys, chunk):
        yield start, _combine(group, offs[:, :, None], block[:, None, :]).reshape(m, -1)


def _chunk_parts(group: GroupDescriptor, sys: LinearSystem, chunk: int = 1 << 18):
    n, d, m = group.order, sys.d, sys.m
    coeffs = sys.matrix
    t = 1
    while t < d and n ** (t + 1) <= chunk:
        t += 1
    block = _form_images(group, coeffs[:, d - t:], _digits(0, n**t, n, t))  # (m, B)
    B = block.shape[1]
    outer_total = n ** (d - t)
    rows = max(1, chunk // B)
    for start in range(0, outer_total, rows):
        stop = min(outer_total, start + rows)
        if d - t:
            offs = _form_images(group, coeffs[:, : d - t], _digits(start, stop, n, d - t))
        else:
            offs = np.zeros((m, 1), dtype=np.int64)
        yield start * B, offs, block


def _combine(group: GroupDescriptor, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if group.order <= 2048:
        return _addition_table(group)[a, b]
    if group.is_cyclic_single:
        out = a + b
        out[out >= group.factors[0]] -= group.factors[0]
        return out
    return group.add_idx(a, b)


def _map_chunks(fn, group, sys, threads: int = 1):
    chunks = image_chunks(group, sys)
    if threads <= 1:
        return [fn(s, im) for s, im in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda c: fn(*c), chunks))


def count_brute(sys: LinearSystem, group: GroupDescriptor, A, threads: int = 1) -> int:
    mask = as_mask(group, A)
    check_budget(group.order**sys.d, "pattern enumeration")
    values = mask.astype(np.uint8)

    def count(part):
        _, offs, block = part
        acc = values[_combine(group, offs[0][:, None], block[0][None, :])]
        for i in range(1, sys.m):
            acc &= values[_combine(group, offs[i][:, None], block[i][None, :])]
        return int(acc.sum(dtype=np.int64))

    parts = _chunk_parts(group, sys)
    if threads <= 1:
        return sum(count(p) for p in parts)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return sum(pool.map(count, parts))


def _pair_table(group: GroupDescriptor, lam: int, eta: int) -> np.ndarray:
    """Index table T[x, y] = lam*x + eta*y."""
    a = group.scale_map(lam)
    b = group.scale_map(eta)
    if group.is_cyclic_single:
        return (a[:, None] + b[None, :]) % group.factors[0]
    return group.add_idx(a[:, None], b[None, :])


def form_factors(sys: LinearSystem, group: GroupDescriptor, values: np.ndarray):
    """Factor tables over variables, one per form (supports of size <= 2 only)."""
    factors = []
    for f in sys.forms:
        sup = f.support
        if len(sup) == 1:
            factors.append(((sup[0],), values[group.scale_map(f.coeffs[sup[0]])]))
        elif len(sup) == 2:
            a, b = sup
            check_budget(group.order**2, "pair table")
            factors.append(((a, b), values[_pair_table(group, f.coeffs[a], f.coeffs[b])]))
        else:
            raise DomainError("elimination needs forms on at most two variables")
    return factors


def count_eliminate(sys: LinearSystem, group: GroupDescriptor, A) -> int:
    mask = as_mask(group, A)
    if group.order**sys.d >= EXACT_FLOAT_LIMIT:
        raise ResourceError("instance count may exceed the exact float range")
    factors = form_factors(sys, group, mask.astype(float))
    return int(round(eliminate([group.order] * sys.d, factors)))


def pattern_count(sys: LinearSystem, group: GroupDescriptor, A, method: str = "auto", threads: int = 1) -> int:
    if method == "auto":
        method = "eliminate" if max(len(f.support) for f in sys.forms) <= 2 else "enumerate"
    if method == "eliminate":
        return count_eliminate(sys, group, A)
    if method == "enumerate":
        return count_brute(sys, group, A, threads)
    raise ValueError(f"unknown method {method!r}")


def pattern_density(sys: LinearSystem, group: GroupDescriptor, A, method: str = "auto", threads: int = 1) -> Fraction:
    return Fraction(pattern_count(sys, group, A, method, threads), group.order**sys.d)


def function_pattern_average(
    sys: LinearSystem, group: GroupDescriptor, values: np.ndarray, method: str = "auto", cap: int | None = None
) -> float:
    """E_x prod_i f(L_i(x)) for a real-valued table f."""
    values = np.asarray(values, dtype=float)
    n, d = group.order, sys.d
    if method == "auto":
        small = max(len(f.support) for f in sys.forms) <= 2 and n * n <= 4 * 10**6
        method = "eliminate" if small else "enumerate"
    if method == "eliminate":
        factors = form_factors(sys, group, values)
        return eliminate([n] * d, factors) / n**d
    check_budget(n**d, "pattern enumeration", cap)
    if group.is_cyclic_single or d == 1:
        total = 0.0
        for _, im in image_chunks(group, sys):
            total += float(np.prod(values[im], axis=0).sum())
        return total / n**d
    return _roll_average(sys, group, values) / n**d


def _roll_average(sys: LinearSystem, group: GroupDescriptor, values: np.ndarray) -> float:
    # loop over the first d-1 variables; the last one is vectorised by rolling
    # the value tensor so that T[o + lam*x] = roll(T, -o)[lam*x]
    n, d = group.order, sys.d
    tensor = values.reshape(group.factors)
    axes = tuple(range(group.rank))
    last = [group.scale_map(f.coeffs[-1]) for f in sys.forms]
    head = sys.matrix[:, :-1]
    total = 0.0
    for outer in itertools.product(range(n), repeat=d - 1):
        offs = _form_images(group, head, np.array(outer, dtype=np.int64)[:, None])[:, 0]
        prod = np.ones(n)
        for i, o in enumerate(offs):
            shift = tuple(-int(c) for c in group.coords[o])
            prod *= np.roll(tensor, shift, axis=axes).reshape(-1)[last[i]]
        total += float(prod.sum())
    return total


@dataclass(frozen=True)
class NondegenerateResult:
    witness: tuple[tuple[int, ...], ...] | None  # one coordinate tuple per variable
    instance: tuple[tuple[int, ...], ...] | None  # image values L_i(x)
    degenerate_count: int  # points of G^d with two equal form values
    degenerate_in_set: int
    total: int


def nondegenerate_search(sys: LinearSystem, group: GroupDescriptor, A, threads: int = 1) -> NondegenerateResult:
    mask = as_mask(group, A)
    check_budget(group.order**sys.d, "non-degenerate search")
    pairs = list(itertools.combinations(range(sys.m), 2))

    def scan(start, im):
        in_set = np.all(mask[im], axis=0)
        degen = np.zeros(im.shape[1], dtype=bool)
        for i, j in pairs:
            degen |= im[i] == im[j]
        good = np.flatnonzero(in_set & ~degen)
        first = start + int(good[0]) if good.size else None
        return first, int(degen.sum()), int((degen & in_set).sum())

    results = _map_chunks(scan, group, sys, threads)
    first = next((r[0] for r in results if r[0] is not None), None)
    witness = instance = None
    if first is not None:
        digits = _digits(first, first + 1, group.order, sys.d)
        im = _form_images(group, sys.matrix, digits)[:, 0]
        witness = tuple(group.coords_of(x) for x in digits[:, 0])
        instance = tuple(group.coords_of(v) for v in im)
    return NondegenerateResult(
        witness,
        instance,
        sum(r[1] for r in results),
        sum(r[2] for r in results),
        group.order**sys.d,
    )


# -- translation invariance ---------------------------------------------------

def _ti_brute(sys: LinearSystem, group: GroupDescriptor) -> bool:
    for j in range(group.rank):
        target = int(group.strides[j])  # generator e_j
        found = False
        for _, im in image_chunks(group, sys):
            if np.any(np.all(im == target, axis=0)):
                found = True
                break
        if not found:
            return False
    return True


def _ti_congruence(sys: LinearSystem, group: GroupDescriptor) -> bool:
    # the image of G^d splits over the cyclic factors, so (e_j, ..., e_j) is
    # an image iff M x = (1, ..., 1) is solvable modulo N_j
    rows = sys.rows()
    return all(solve_congruence(rows, [1] * sys.m, n) is not None for n in group.factors)


def is_translation_invariant(sys: LinearSystem, group: GroupDescriptor, method: str = "auto") -> bool:
    cost = group.order**sys.d * sys.m
    if method == "auto":
        method = "brute" if cost <= 10**7 else "congruence"
    if method == "brute":
        check_budget(cost, "image enumeration", 10**7)
        return _ti_brute(sys, group)
    if method == "congruence":
        return _ti_congruence(sys, group)
    raise ValueError(f"unknown method {method!r}")


# -- complexity ---------------------------------------------------------------

def _partition_avoiding(items: list[list[int]], classes: int, target: list[int]) -> bool:
    """Can items be split into at most `classes` groups, none spanning target?"""
    groups: list[list[list[int]]] = []

    def place(i: int) -> bool:
        if i == len(items):
            return True
        for g in groups:
            g.append(items[i])
            if not in_rational_span(target, g) and place(i + 1):
                return True
            g.pop()
        if len(groups) < classes:
            groups.append([items[i]])
            if not in_rational_span(target, groups[-1]) and place(i + 1):
                return True
            groups.pop()
        return False

    return place(0)


def cs_complexity(sys: LinearSystem, positive: bool = True) -> int:
    """Cauchy-Schwarz complexity.

    With ``positive`` (default) the value is floored at 1, the usual
    convention; ``positive=False`` gives the literal minimum, which is 0 for
    a single form or for systems where no form is entangled with the others.
    """
    if sys.m > 8:
        raise ResourceError("partition search is limited to m <= 8 forms")
    rows = sys.rows()
    worst = 1
    for i, target in enumerate(rows):
        others = rows[:i] + rows[i + 1:]
        if not others:
            continue
        for c in range(1, len(others) + 1):
            if _partition_avoiding(others, c, target):
                worst = max(worst, c)
                break
        else:
            raise DomainError(f"form {i} is a multiple of another form; complexity is infinite")
    raw = worst - 1
    return max(1, raw) if positive else raw


def tensor_power(L: LinearForm, k: int, cap: int = 10**6) -> LinearForm:
    if k < 1:
        raise DomainError("tensor power needs k >= 1")
    check_budget(L.d**k, "tensor power", cap)
    coeffs = [math.prod(c) for c in itertools.product(L.coeffs, repeat=k)]
    if not any(coeffs):
        raise DomainError("tensor power vanished")
    return LinearForm(tuple(coeffs))


def _power_rows(sys: LinearSystem, k: int) -> list[list[int]]:
    return [[math.prod(c) for c in itertools.product(f.coeffs, repeat=k)] for f in sys.forms]


def true_complexity(sys: LinearSystem, q: int) -> int:
    cs = cs_complexity(sys)
    if cs > q:
        raise DomainError(f"CS-complexity {cs} exceeds the field size {q}")
    for k in range(1, max(1, cs) + 1):
        if rank_mod(_power_rows(sys, k + 1), q) == sys.m:
            return k
    raise DomainError(
        f"no k <= {cs} makes the tensor powers independent mod {q}; field too small"
    )


