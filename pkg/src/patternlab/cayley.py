"""Cayley sum graphs Cay(G, A): x ~ y iff x + y in A and x != y."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .config import check_budget
from .errors import DomainError
from .groups import GroupDescriptor, inverse_scalar
from .linear_systems import as_mask, clique_system, is_translation_invariant, pattern_density


@dataclass(frozen=True, eq=False)
class CayleySumGraph:
    group: GroupDescriptor
    mask: np.ndarray

    @classmethod
    def build(cls, group: GroupDescriptor, A) -> "CayleySumGraph":
        return cls(group, as_mask(group, A))

    @cached_property
    def loops(self) -> int:
        """|{x : 2x in A}|; loops are never edges."""
        return int(np.count_nonzero(self.mask[self.group.scale_map(2)]))

    @property
    def ordered_edges(self) -> int:
        return self.group.order * int(np.count_nonzero(self.mask)) - self.loops

    @property
    def edges(self) -> int:
        return self.ordered_edges // 2

    @property
    def edge_density(self) -> Fraction:
        n = self.group.order
        return Fraction(self.ordered_edges, n * (n - 1)) if n > 1 else Fraction(0)

    def adjacency(self, cap: int | None = None) -> np.ndarray:
        n = self.group.order
        check_budget(n * n, "adjacency matrix", cap)
        idx = np.arange(n)
        adj = self.mask[self.group.add_idx(idx[:, None], idx[None, :])]
        np.fill_diagonal(adj, False)
        return adj


@dataclass(frozen=True)
class CliqueResult:
    r: int
    t_density: Fraction  # pattern density of the clique system, loops and repeats included
    clique_tuples: int  # ordered r-tuples of distinct vertices spanning K_r
    nondegenerate: int  # those whose pairwise sums are also distinct

    @property
    def cliques(self) -> int:
        return self.clique_tuples // math.factorial(self.r)


def _cliques_from(adj: np.ndarray, group: GroupDescriptor, r: int, check_sums: bool) -> tuple[int, int]:
    """Unordered K_r count and the non-degenerate part, by ordered backtracking."""
    n = adj.shape[0]
    total = nondeg = 0

    def extend(clique: list[int], cand: np.ndarray):
        nonlocal total, nondeg
        if len(clique) == r:
            total += 1
            if check_sums:
                sums = [group.add_idx(a, b) for i, a in enumerate(clique) for b in clique[i + 1 :]]
                nondeg += len(set(int(s) for s in sums)) == len(sums)
            return
        for v in np.flatnonzero(cand):
            extend(clique + [int(v)], cand & adj[v] & (np.arange(n) > v))

    extend([], np.ones(n, dtype=bool))
    return total, nondeg if check_sums else total


def clique_density(graph: CayleySumGraph, r: int, cap: int | None = None) -> CliqueResult:
    if r < 2:
        raise DomainError("clique size must be at least 2")
    g = graph.group
    t = pattern_density(clique_system(r), g, graph.mask)
    fact = math.factorial(r)
    if r == 2:
        return CliqueResult(r, t, graph.ordered_edges, graph.ordered_edges)
    adj = graph.adjacency(cap)
    if r == 3:
        # closed 3-walks on a loopless graph visit three distinct vertices,
        # and x+y = x+z forces y = z, so every triangle is non-degenerate
        a = adj.astype(float)
        tri = int(round(float(np.sum((a @ a) * a))))
        return CliqueResult(r, t, tri, tri)
    n = g.order
    check_budget(n ** min(r, 4), "clique backtracking", cap)
    total, nondeg = _cliques_from(adj, g, r, True)
    return CliqueResult(r, t, total * fact, nondeg * fact)


def clique_free(graph: CayleySumGraph, r: int, cap: int | None = None) -> bool:
    return clique_density(graph, r, cap).clique_tuples == 0


# -- translation invariance ------------------------------------------------------------

def clique_shift_witness(group: GroupDescriptor, s: int) -> int:
    """c with 2c = s, so translating every vertex by c moves each form value by s."""
    half = inverse_scalar(2, group)
    c = int(group.scale_idx(half, s))
    if int(group.scale_idx(2, c)) != int(s) % group.order and group.order:
        raise DomainError("halving failed")
    return c


# -- generators and experiments -------------------------------------------------------------

def odd_set(group: GroupDescriptor) -> np.ndarray:
    if group.rank != 1 or group.order % 2:
        raise DomainError("the odd-residue set needs a cyclic group of even order")
    return np.arange(group.order) % 2 == 1


def greedy_triangle_free(group: GroupDescriptor, seed: int = 0, cap: int | None = None) -> np.ndarray:
    """Add elements in a seeded random order, skipping any that would create a triangle."""
    n = group.order
    check_budget(n * n, "greedy triangle-free construction", cap)
    idx = np.arange(n)
    add = group.add_idx(idx[:, None], idx[None, :])
    A = np.zeros(n, dtype=bool)
    for x in np.random.default_rng(seed).permutation(n):
        A[x] = True
        # new edges {a, x - a}; a triangle needs a common neighbour c of both ends
        a = idx
        b = group.sub_idx(x, a)
        keep = a < b
        a, b = a[keep], b[keep]
        common = A[add[a]] & A[add[b]]
        common[np.arange(len(a)), a] = False
        common[np.arange(len(a)), b] = False
        if common.any():
            A[x] = False
    return A


def greedy_clique_free(group: GroupDescriptor, r: int, seed: int = 0, cap: int | None = None) -> np.ndarray:
    if r == 3:
        return greedy_triangle_free(group, seed, cap)
    A = np.zeros(group.order, dtype=bool)
    for x in np.random.default_rng(seed).permutation(group.order):
        A[x] = True
        if not clique_free(CayleySumGraph(group, A.copy()), r, cap):
            A[x] = False
    return A


def turan_experiment(groups, r: int, generator: str = "greedy", seed: int = 0, strict: bool = False, cap: int | None = None) -> list[dict]:
    rows = []
    for g in groups:
        if isinstance(g, str):
            g = GroupDescriptor.parse(g)
        if g.order % 2 == 0 and strict:
            raise DomainError(
                f"{g.label} has even order: the odd residues of Z_2N give a triangle-free Cayley sum graph "
                "of edge density about 1/2, so odd order is required"
            )
        if generator == "greedy":
            A = greedy_clique_free(g, r, seed, cap)
        elif generator == "odd":
            A = odd_set(g)
        elif generator == "empty":
            A = np.zeros(g.order, dtype=bool)
        else:
            raise DomainError(f"unknown generator {generator!r}")
        graph = CayleySumGraph(g, A)
        res = clique_density(graph, r, cap)
        rows.append({
            "group": g.label,
            "order": g.order,
            "set_size": int(A.sum()),
            "edge_density": float(graph.edge_density),
            "loops": graph.loops,
            "clique_free": res.clique_tuples == 0,
            "nondegenerate_cliques": res.nondegenerate,
            "translation_invariant": is_translation_invariant(clique_system(r), g),
        })
    return rows
