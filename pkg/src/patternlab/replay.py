"""Re-verification of report witnesses from their raw inputs.

Each witness carries a ``kind``; :data:`CHECKERS` maps kinds to functions that
recompute the claimed quantities and return a list of failed inequalities
(empty means the witness holds).
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .bohr import BohrSet, bohr_build, dilate, is_regular, whole_group
from .cayley import CayleySumGraph, clique_density
from .constructions import sample_rectangles, set_pattern_count, spreadness_certificate
from .errors import PreconditionError
from .graph_counting import Rectangle, hom_density
from .groups import GroupDescriptor
from .increment import IncrementConfig, edge_tables, run_increment_loop, shifted
from .io import read_adjacency, read_set
from .linear_systems import LinearSystem, OrientedGraph, pattern_count, underlying_graph
from .report import SCHEMA_VERSION, parse_rational, strip_timing, to_jsonable


def _group(w) -> GroupDescriptor:
    return GroupDescriptor.parse(w["group"])


def _system(w) -> LinearSystem:
    return LinearSystem.from_rows(w["system"])


def _set(w, group) -> np.ndarray:
    if "elements" in w:
        mask = np.zeros(group.order, dtype=bool)
        mask[[int(group.index_of(c)) for c in w["elements"]]] = True
        return mask
    return read_set(w["set"], group)


def set_elements(group: GroupDescriptor, mask: np.ndarray) -> list[list[int]]:
    return [list(group.coords_of(i)) for i in np.flatnonzero(mask)]


def load_tables(source: dict) -> tuple[OrientedGraph, dict]:
    """Rebuild (H, edge tables) from a table source description."""
    if source["type"] == "system":
        group = _group(source)
        system = _system(source)
        mask = _set(source, group)
        H = underlying_graph(system)
        sets = [whole_group(group)] * H.k
        return H, edge_tables(group, mask, system, sets)
    H = OrientedGraph(source["k"], tuple(tuple(e) for e in source["edges"]))
    tables = {}
    for key, path in source["tables"].items():
        u, v = (int(x) for x in key.split("-"))
        tables[(u, v)] = read_adjacency(path)
    return H, tables


def _cmp(fails: list, name: str, got, want) -> None:
    if got != want:
        fails.append(f"{name}: recomputed {got} != claimed {want}")


def check_count(w) -> list[str]:
    g, s = _group(w), _system(w)
    mask = _set(w, g)
    fails: list[str] = []
    n = pattern_count(s, g, mask)
    _cmp(fails, "count", n, int(w["count"]))
    _cmp(fails, "density", Fraction(n, g.order**s.d), parse_rational(w["density"]))
    return fails


def _rect_exact(table: np.ndarray, S, T) -> Fraction:
    sub = table[np.ix_(S, T)]
    return Fraction(int(round(float(sub.sum()))), sub.size)


def check_rectangle(w) -> list[str]:
    H, tables = load_tables(w["source"])
    A = tables[tuple(w["edge"])]
    fails: list[str] = []
    try:
        rect = Rectangle(tuple(w["S"]), tuple(w["T"]), A.shape[0], A.shape[1])
    except Exception as exc:
        return [f"rectangle malformed: {exc}"]
    dens = _rect_exact(A, list(rect.S), list(rect.T))
    meas = Fraction(len(rect.S) * len(rect.T), A.shape[0] * A.shape[1])
    _cmp(fails, "rectangle density", dens, parse_rational(w["density"]))
    _cmp(fails, "rectangle measure", meas, parse_rational(w["measure"]))
    if w.get("direction", "above") == "above":
        if float(dens) < w["density_bound"] - 1e-12:
            fails.append(f"density {float(dens):.6g} >= {w['density_bound']:.6g} fails")
    elif float(dens) > w["density_bound"] + 1e-12:
        fails.append(f"density {float(dens):.6g} <= {w['density_bound']:.6g} fails")
    if float(meas) < w["measure_bound"] * (1 - 1e-12):
        fails.append(f"measure {float(meas):.6g} >= {w['measure_bound']:.6g} fails")
    return fails


def check_low_degree_set(w) -> list[str]:
    H, tables = load_tables(w["source"])
    A = tables[tuple(w["edge"])]
    S = list(w["vertices"])
    fails: list[str] = []
    rows = A.mean(axis=1)
    worst = float(rows[S].max()) if S else 0.0
    if not S:
        fails.append("vertex set is empty")
    if worst > w["row_density_at_most"] + 1e-12:
        fails.append(f"max row density {worst:.6g} <= {w['row_density_at_most']:.6g} fails")
    if len(S) / len(rows) < w["set_density_at_least"] - 1e-12:
        fails.append(f"set density {len(S) / len(rows):.6g} >= {w['set_density_at_least']:.6g} fails")
    return fails


def check_hom_density(w) -> list[str]:
    H, tables = load_tables(w["source"])
    t = hom_density(H, tables)
    if not math.isclose(t, w["t"], rel_tol=1e-12, abs_tol=1e-15):
        return [f"t_H: recomputed {t!r} != claimed {w['t']!r}"]
    return []


def _bohr_from(w) -> BohrSet:
    return bohr_build(_group(w), [tuple(f) for f in w["frequencies"]], w["width"])


def check_bohr(w) -> list[str]:
    B = _bohr_from(w)
    fails: list[str] = []
    _cmp(fails, "size", B.size, int(w["size"]))
    if w.get("regular") is not None:
        _cmp(fails, "regular", is_regular(B), bool(w["regular"]))
    return fails


def check_regular_dilate(w) -> list[str]:
    B = _bohr_from(w["base"])
    D = dilate(B, w["rho"])
    fails: list[str] = []
    _cmp(fails, "dilate size", D.size, int(w["size"]))
    if not 0.5 <= w["rho"] <= 1:
        fails.append(f"rho {w['rho']} in [1/2, 1] fails")
    if not is_regular(D):
        fails.append("exact regularity of the dilate fails")
    floor = (w["rho"] / 4) ** B.rank * B.size
    if D.size < floor - 1e-9:
        fails.append(f"|B_rho| = {D.size} >= (rho/4)^d |B| = {floor:.6g} fails")
    return fails


def check_increment(w) -> list[str]:
    g, s = _group(w), _system(w)
    mask = _set(w, g)
    fails: list[str] = []
    cur = mask.copy()
    prev = np.count_nonzero(cur) / g.order
    for st in w["trace"]["steps"]:
        B = BohrSet(g, tuple(tuple(f) for f in st["bohr"]["frequencies"]), float(st["bohr"]["width"]))
        x = int(g.add_idx(st["constants"].get("selection_shift", 0), st["shift"]))
        cur = shifted(g, cur, x) & B.mask
        dens = np.count_nonzero(cur) / B.size
        if dens != st["density"]:
            fails.append(f"step {st['index']}: density {dens!r} != claimed {st['density']!r}")
        if not dens > prev:
            fails.append(f"step {st['index']}: density {dens:.6g} > {prev:.6g} fails")
        prev = dens
    cfg = IncrementConfig(**w["trace"]["config"])
    rerun = to_jsonable(run_increment_loop(g, mask, s, w["trace"]["eps"], cfg).to_json(timings=False))
    if rerun != strip_timing(w["trace"]):
        fails.append("replayed trace differs from the stored trace")
    return fails


def check_cayley(w) -> list[str]:
    g = _group(w)
    graph = CayleySumGraph(g, _set(w, g))
    res = clique_density(graph, int(w["clique"]))
    fails: list[str] = []
    _cmp(fails, "loops", graph.loops, int(w["loops"]))
    _cmp(fails, "edge density", graph.edge_density, parse_rational(w["edge_density"]))
    _cmp(fails, "clique t-density", res.t_density, parse_rational(w["t_density"]))
    _cmp(fails, "clique tuples", res.clique_tuples, int(w["clique_tuples"]))
    _cmp(fails, "non-degenerate cliques", res.nondegenerate, int(w["nondegenerate"]))
    return fails


def check_spread_certificate(w) -> list[str]:
    g = _group(w)
    mask = _set(w, g)
    cert = spreadness_certificate(g, mask, [float(r) for r in w["deltas"]])
    fails: list[str] = []
    if not math.isclose(cert.max_fourier, w["max_fourier"], rel_tol=1e-9, abs_tol=1e-15):
        fails.append(f"max Fourier coefficient {cert.max_fourier!r} != claimed {w['max_fourier']!r}")
    for r, val in w["deltas"].items():
        if not math.isclose(cert.max_fourier * 2.0 ** float(r), val, rel_tol=1e-9):
            fails.append(f"delta({r}) = M 2^r fails")
    if "samples" in w:
        devs = sample_rectangles(g, mask, cert, w["sample_r"], w["samples"], w["sample_seed"])
        bad = sum(dv > bd for dv, bd in devs)
        if bad:
            fails.append(f"{bad} sampled rectangle deviations exceed the certified bound")
    return fails


def check_pattern_excess(w) -> list[str]:
    g, s = _group(w), _system(w)
    mask = _set(w, g)
    n = set_pattern_count(s, g, mask)
    fails: list[str] = []
    _cmp(fails, "count", n, int(w["count"]))
    beta = Fraction(int(mask.sum()), g.order)
    excess = Fraction(n, g.order**s.d) - beta**s.m
    if not excess > 0:
        fails.append(f"t_L(A) - beta^m = {float(excess):.6g} > 0 fails")
    return fails


CHECKERS = {
    "count": check_count,
    "rectangle": check_rectangle,
    "low_degree_set": check_low_degree_set,
    "hom_density": check_hom_density,
    "bohr": check_bohr,
    "regular_dilate": check_regular_dilate,
    "increment": check_increment,
    "cayley": check_cayley,
    "spread_certificate": check_spread_certificate,
    "pattern_excess": check_pattern_excess,
}


def verify_report(report: dict) -> list[tuple[int, str, list[str]]]:
    """Per-witness (index, kind, failures)."""
    if report.get("schema") != SCHEMA_VERSION:
        raise PreconditionError(f"unsupported report schema {report.get('schema')!r}")
    out = []
    for i, w in enumerate(report.get("witnesses", [])):
        kind = w.get("kind")
        if kind not in CHECKERS:
            out.append((i, str(kind), [f"unknown witness kind {kind!r}"]))
            continue
        out.append((i, kind, CHECKERS[kind](w)))
    return out
