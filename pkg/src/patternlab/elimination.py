"""Sum-product over factor tables by greedy minimum-degree variable elimination."""
from __future__ import annotations

import math
import string
from typing import Sequence

import numpy as np

from .config import check_budget
from .errors import ResourceError

Factor = tuple[tuple[int, ...], np.ndarray]

_LETTERS = string.ascii_letters
EXACT_FLOAT_LIMIT = 2**53
TABLE_CAP = 6 * 10**7


def _letters(vars_: Sequence[int], names: dict[int, str]) -> str:
    return "".join(names[v] for v in vars_)


def eliminate(
    sizes: Sequence[int],
    factors: Sequence[Factor],
    keep: Sequence[int] = (),
    order: Sequence[int] | None = None,
    table_cap: int = TABLE_CAP,
):
    """Sum over all non-kept variables of the product of factors.

    Returns a scalar when ``keep`` is empty, else an array over ``keep`` (in
    that order).  Variables touched by no factor contribute their size as a
    multiplicative constant.
    """
    nvars = len(sizes)
    if nvars > len(_LETTERS):
        raise ValueError("too many variables for einsum labels")
    names = {v: _LETTERS[v] for v in range(nvars)}
    live: list[Factor] = []
    for vars_, table in factors:
        t = np.asarray(table, dtype=float)
        if t.shape != tuple(sizes[v] for v in vars_):
            raise ValueError(f"factor over {vars_} has shape {t.shape}")
        live.append((tuple(vars_), t))
    keep = tuple(keep)
    touched = {v for vs, _ in live for v in vs}
    scale = 1
    for v in range(nvars):
        if v not in touched and v not in keep:
            scale *= sizes[v]
    pending = [v for v in range(nvars) if v in touched and v not in keep]
    if order is not None:
        pending = [v for v in order if v in pending]

    while pending:
        if order is None:
            v = min(pending, key=lambda u: (_neighbour_cost(u, live, sizes, keep), u))
        else:
            v = pending[0]
        pending.remove(v)
        involved = [f for f in live if v in f[0]]
        live = [f for f in live if v not in f[0]]
        out_vars = tuple(sorted({u for vs, _ in involved for u in vs if u != v}))
        check_budget(math.prod(sizes[u] for u in out_vars), "elimination table", table_cap)
        spec = ",".join(_letters(vs, names) for vs, _ in involved) + "->" + _letters(out_vars, names)
        new = np.einsum(spec, *[t for _, t in involved], optimize="greedy")
        live.append((out_vars, np.asarray(new, dtype=float)))

    if not keep:
        total = 1.0
        for vs, t in live:
            total *= float(t) if np.ndim(t) == 0 else float(t.sum())
        return total * scale
    spec = ",".join(_letters(vs, names) for vs, _ in live) + "->" + _letters(keep, names)
    operands = [t for _, t in live]
    if not operands:
        return np.full(tuple(sizes[v] for v in keep), float(scale))
    # kept variables missing from every factor still need their axis
    missing = [v for v in keep if v not in {u for vs, _ in live for u in vs}]
    for v in missing:
        operands.append(np.ones(sizes[v]))
        spec = spec.replace("->", "," + names[v] + "->")
    return np.einsum(spec, *operands, optimize="greedy") * scale


def _neighbour_cost(v: int, live: list[Factor], sizes, keep) -> int:
    nb = {u for vs, _ in live if v in vs for u in vs if u != v}
    return math.prod(sizes[u] for u in nb)


def exact_count(sizes: Sequence[int], factors: Sequence[Factor]) -> int:
    """Integer sum-product for 0/1 (or small integer) tables."""
    bound = math.prod(sizes)
    for _, t in factors:
        m = float(np.max(np.abs(t))) if np.size(t) else 0.0
        bound *= max(1.0, m)
    if bound >= EXACT_FLOAT_LIMIT:
        raise ResourceError("count may exceed the exact float range")
    return int(round(eliminate(sizes, factors)))
