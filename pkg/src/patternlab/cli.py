"""The ``patternlab`` command line.

Exit codes: 0 success, 1 unparseable or missing input, 2 a precondition of
the requested computation fails, 3 budget exceeded, 4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bohr import bohr_build, find_regular_dilate, is_regular
from .cayley import CayleySumGraph, clique_density, greedy_clique_free, odd_set, turan_experiment
from .config import enumeration_cap
from .constructions import (
    build_f,
    gamma_analysis,
    max_nontrivial_fourier,
    round_to_set,
    sample_rectangles,
    set_pattern_count,
    spreadness_certificate,
)
from .errors import (
    InputFormatError,
    InternalCheckError,
    PatternLabError,
    PreconditionError,
    ResourceError,
    VerificationError,
)
from .graph_counting import hom_density, low_disc_locate, main_count_diagnose
from .groups import GroupDescriptor
from .increment import PRESETS, run_increment_loop
from .io import parse_group, read_set, read_system, write_set
from .linear_systems import clique_system, is_translation_invariant, pattern_count
from .replay import load_tables, set_elements, verify_report
from .report import build_report, dumps, load_report, rational, write_report

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION, EXIT_RESOURCE, EXIT_VERIFY = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputFormatError("command line", None, message)


def _abs(path) -> str:
    return str(Path(path).resolve())


def _emit(args, report: dict) -> None:
    if args.report:
        write_report(args.report, report)
    else:
        sys.stdout.write(dumps(report))


def _common(args) -> dict:
    return {"seed": args.seed, "threads": args.threads, "budget": enumeration_cap()}


def _frequencies(group: GroupDescriptor, text: str) -> list[tuple[int, ...]]:
    try:
        if ";" in text or group.rank > 1:
            return [tuple(int(c) for c in part.split(",")) for part in text.split(";") if part.strip()]
        return [(int(c),) for c in text.split(",") if c.strip()]
    except ValueError:
        raise InputFormatError("--freqs", None, f"cannot parse frequencies {text!r}") from None


# -- subcommands -----------------------------------------------------------------------

def cmd_count(args) -> int:
    g = parse_group(args.group)
    system = read_system(args.system)
    mask = read_set(args.set, g)
    started = time.perf_counter()
    n = pattern_count(system, g, mask, args.method, args.threads)
    dens = Fraction(n, g.order**system.d)
    config = {**_common(args), "group": g.label, "system": _abs(args.system), "set": _abs(args.set), "method": args.method}
    witness = {"kind": "count", "group": g.label, "system": system.rows(), "set": _abs(args.set), "count": n, "density": rational(dens)}
    results = {"count": n, "density": rational(dens), "set_density": rational(Fraction(int(mask.sum()), g.order)), "d": system.d, "m": system.m}
    _emit(args, build_report("count", config, results, [witness], "ok", {"seconds": time.perf_counter() - started}))
    return EXIT_OK


def _diagnose_source(args):
    if args.system:
        g = parse_group(args.group)
        system = read_system(args.system)
        read_set(args.set, g)
        return {"type": "system", "group": g.label, "system": system.rows(), "set": _abs(args.set)}
    if not args.graph or not args.table:
        raise InputFormatError("command line", None, "diagnose needs --system/--set or --graph with --table")
    edges = []
    for part in args.graph.split(","):
        try:
            u, v = (int(x) for x in part.split("-"))
        except ValueError:
            raise InputFormatError("--graph", None, f"bad edge {part!r}") from None
        edges.append([u, v])
    k = max(max(e) for e in edges) + 1
    tables = {}
    for item in args.table:
        key, _, path = item.partition("=")
        tables[key] = _abs(path)
    missing = {f"{u}-{v}" for u, v in edges} - set(tables)
    if missing:
        raise InputFormatError("--table", None, f"no table for edges {sorted(missing)}")
    return {"type": "files", "k": k, "edges": edges, "tables": tables}


def _rect_witness(source, edge, rect, table, direction, density_bound, measure_bound) -> dict:
    sub = table[np.ix_(list(rect.S), list(rect.T))]
    return {
        "kind": "rectangle", "source": source, "edge": list(edge), "S": list(rect.S), "T": list(rect.T),
        "direction": direction, "density": rational(Fraction(int(round(float(sub.sum()))), sub.size)),
        "measure": rational(Fraction(sub.size, table.size)), "density_bound": density_bound, "measure_bound": measure_bound,
    }


def cmd_diagnose(args) -> int:
    source = _diagnose_source(args)
    H, tables = load_tables(source)
    started = time.perf_counter()
    t = hom_density(H, tables)
    witnesses = [{"kind": "hom_density", "source": source, "t": t}]
    config = {**_common(args), "source": source, "epsilon": args.epsilon, "p_cap": args.p_cap, "mode": args.mode}
    if args.mode == "locate":
        res = low_disc_locate(H, tables, args.epsilon)
        verdict = "WithinBand" if res.within_band else "Rectangle"
        results = {"t": res.t, "product": res.product, "within_band": res.within_band, "direction": res.direction,
                   "edge": res.edge, "density": res.density, "measure": res.measure, "peeled": res.peeled}
        if not res.within_band:
            witnesses.append(_rect_witness(source, res.edge, res.rectangle, tables[res.edge], res.direction, res.density_bound, res.measure_bound))
    else:
        diag = main_count_diagnose(H, tables, args.epsilon, args.p_cap)
        verdict = diag.variant
        results = {"variant": diag.variant, "edge": diag.edge, "p": diag.p, "delta": diag.delta,
                   "claimed": diag.claimed, "constants": diag.constants, "notes": diag.notes}
        if diag.variant == "DenseRectangle":
            c = diag.claimed
            witnesses.append(_rect_witness(source, diag.edge, diag.rectangle, tables[diag.edge], "above", c["density_at_least"], c["measure_at_least"]))
            results["rectangle"] = {"S": list(diag.rectangle.S), "T": list(diag.rectangle.T)}
        elif diag.variant == "LowDegreeSet":
            c = diag.claimed
            witnesses.append({"kind": "low_degree_set", "source": source, "edge": list(diag.edge), "vertices": list(diag.vertex_set),
                              "row_density_at_most": c["row_density_at_most"], "set_density_at_least": c["set_density_at_least"]})
    results["t_H"] = t
    _emit(args, build_report("diagnose", config, results, witnesses, verdict, {"seconds": time.perf_counter() - started}))
    return EXIT_OK


def cmd_bohr(args) -> int:
    g = parse_group(args.group)
    B = bohr_build(g, _frequencies(g, args.freqs), args.width)
    started = time.perf_counter()
    info = {"group": g.label, "frequencies": [list(f) for f in B.frequencies], "width": B.width, "rank": B.rank, "size": B.size}
    info["regular"] = is_regular(B) if args.check_regular else None
    witnesses = [{"kind": "bohr", **info}]
    results = dict(info)
    if args.members:
        results["members"] = set_elements(g, B.mask)
    if args.find_regular:
        rd = find_regular_dilate(B)
        results["regular_dilate"] = {"rho": rd.rho, "size": rd.bohr.size, "passed": rd.passed, "violation": rd.violation}
        if rd.passed:
            base = {k: info[k] for k in ("group", "frequencies", "width")}
            witnesses.append({"kind": "regular_dilate", "base": base, "rho": rd.rho, "size": rd.bohr.size})
    config = {**_common(args), "group": g.label, "freqs": args.freqs, "width": args.width}
    _emit(args, build_report("bohr", config, results, witnesses, "ok", {"seconds": time.perf_counter() - started}))
    return EXIT_OK


def cmd_increment(args) -> int:
    g = parse_group(args.group)
    system = read_system(args.system)
    mask = read_set(args.set, g)
    overrides = {"seed": args.seed, "max_steps": args.budget_steps}
    for name in ("gamma", "delta_spread", "p_cap", "shift_constant", "rho"):
        val = getattr(args, name)
        if val is not None:
            overrides[name] = val
    cfg = replace(PRESETS[args.preset], **overrides)
    started = time.perf_counter()
    trace = run_increment_loop(g, mask, system, args.epsilon, cfg)
    tj = trace.to_json(timings=True)
    witness = {"kind": "increment", "group": g.label, "system": system.rows(), "set": _abs(args.set), "trace": tj}
    config = {**_common(args), "group": g.label, "system": _abs(args.system), "set": _abs(args.set), "epsilon": args.epsilon,
              "preset": args.preset, "constants": cfg.to_json()}
    results = {"verdict": trace.verdict, "reason": trace.reason, "densities": trace.densities(), "steps": len(trace.steps),
               "certificate": tj["certificate"]}
    _emit(args, build_report("increment", config, results, [witness], trace.verdict, {"seconds": time.perf_counter() - started}))
    return EXIT_OK


def cmd_construct(args) -> int:
    system = read_system(args.system)
    started = time.perf_counter()
    f = build_f(args.q, args.n)
    g = f.group
    rounded = round_to_set(f, args.seed)
    mask = rounded.mask
    if args.out:
        write_set(args.out, g, mask)
    r_list = [float(r) for r in args.r_list.split(",")]
    cert = spreadness_certificate(g, mask, r_list)
    count = set_pattern_count(system, g, mask)
    beta = Fraction(int(mask.sum()), g.order)
    t_A = Fraction(count, g.order**system.d)
    results = {
        "group": g.label, "f_max_fourier": max_nontrivial_fourier(f), "set_size": int(mask.sum()),
        "density": rational(beta), "t_L_A": rational(t_A), "beta_power_m": rational(beta**system.m),
        "excess": rational(t_A - beta**system.m), "fourier_gap": rounded.fourier_gap, "fourier_gap_threshold": rounded.threshold,
        "max_fourier": cert.max_fourier, "deltas": {str(r): v for r, v in cert.deltas.items()},
    }
    if args.gamma:
        ga = gamma_analysis(system, args.q, args.n)
        results["gamma_analysis"] = {"gamma_sum": ga.gamma_sum, "formula": ga.formula, "constant": ga.constant,
                                     "envelope": ga.envelope, "gamma_dim": ga.gamma_dim}
    set_ref = {"set": _abs(args.out)} if args.out else {"elements": set_elements(g, mask)}
    witnesses = [
        {"kind": "spread_certificate", "group": g.label, **set_ref, "max_fourier": cert.max_fourier,
         "deltas": {str(r): v for r, v in cert.deltas.items()}},
        {"kind": "pattern_excess", "group": g.label, "system": system.rows(), **set_ref, "count": count},
    ]
    if args.samples:
        devs = sample_rectangles(g, mask, cert, args.sample_r, args.samples, args.seed)
        results["samples"] = {"count": args.samples, "r": args.sample_r, "max_deviation": max(d for d, _ in devs),
                              "bound": devs[0][1], "violations": sum(d > b for d, b in devs)}
        witnesses[0].update(samples=args.samples, sample_r=args.sample_r, sample_seed=args.seed)
    config = {**_common(args), "q": args.q, "n": args.n, "system": _abs(args.system), "out": _abs(args.out) if args.out else None}
    verdict = "excess" if t_A > beta**system.m else "no-excess"
    _emit(args, build_report("construct", config, results, witnesses, verdict, {"seconds": time.perf_counter() - started}))
    return EXIT_OK


def cmd_cayley(args) -> int:
    if args.sweep:
        rows = turan_experiment(args.sweep.split(","), args.clique, args.generator or "greedy", args.seed, args.strict)
        if args.csv:
            with open(args.csv, "w", newline="", encoding="utf-8") as fh:
                w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
                w.writeheader()
                w.writerows(rows)
        config = {**_common(args), "sweep": args.sweep, "clique": args.clique, "generator": args.generator or "greedy", "strict": args.strict}
        _emit(args, build_report("cayley", config, {"rows": rows}, [], "ok"))
        return EXIT_OK
    g = parse_group(args.group)
    if args.set:
        mask = read_set(args.set, g)
        set_ref = {"set": _abs(args.set)}
    else:
        gen = args.generator or "greedy"
        mask = odd_set(g) if gen == "odd" else greedy_clique_free(g, args.clique, args.seed)
        set_ref = {"elements": set_elements(g, mask)}
    if args.strict and g.order % 2 == 0:
        raise PreconditionError(f"{g.label} has even order; strict mode requires odd order")
    started = time.perf_counter()
    graph = CayleySumGraph(g, mask)
    res = clique_density(graph, args.clique)
    results = {
        "loops": graph.loops, "edges": graph.edges, "edge_density": rational(graph.edge_density), "clique": args.clique,
        "t_density": rational(res.t_density), "clique_tuples": res.clique_tuples, "cliques": res.cliques,
        "nondegenerate": res.nondegenerate, "translation_invariant": is_translation_invariant(clique_system(args.clique), g),
        "set_size": int(mask.sum()),
    }
    witness = {"kind": "cayley", "group": g.label, **set_ref, "clique": args.clique, "loops": graph.loops,
               "edge_density": rational(graph.edge_density), "t_density": rational(res.t_density),
               "clique_tuples": res.clique_tuples, "nondegenerate": res.nondegenerate}
    config = {**_common(args), "group": g.label, **set_ref, "clique": args.clique, "generator": args.generator}
    _emit(args, build_report("cayley", config, results, [witness], "ok", {"seconds": time.perf_counter() - started}))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        report = load_report(args.path)
    except FileNotFoundError:
        raise InputFormatError(args.path, None, "file not found") from None
    except ValueError as exc:
        raise InputFormatError(args.path, None, f"not valid JSON ({exc})") from None
    outcome = verify_report(report)
    ok = True
    for i, kind, fails in outcome:
        status = "PASS" if not fails else "FAIL"
        ok &= not fails
        print(f"witness {i} ({kind}): {status}")
        for f in fails:
            print(f"  {f}")
    return EXIT_OK if ok else EXIT_VERIFY


# -- parser --------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="patternlab", description="Exact linear-pattern counting and density-increment experiments.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--report", help="write the JSON report here instead of stdout")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1, help="worker cap for enumeration kernels")
        sp.add_argument("--budget", type=int, help="enumeration cap (overrides PATTERNLAB_BUDGET)")

    sp = sub.add_parser("count", help="exact pattern count of a set")
    sp.add_argument("--group", required=True)
    sp.add_argument("--system", required=True)
    sp.add_argument("--set", required=True)
    sp.add_argument("--method", default="auto", choices=["auto", "eliminate", "enumerate"])
    common(sp)
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("diagnose", help="locate a dense rectangle or low-degree set behind a count deviation")
    sp.add_argument("--group")
    sp.add_argument("--system")
    sp.add_argument("--set")
    sp.add_argument("--graph", help="edges such as 0-1,0-2,1-2")
    sp.add_argument("--table", action="append", help="EDGE=PATH, e.g. 0-1=t01.csv (CSV or PLAD)")
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--p-cap", type=int, default=4)
    sp.add_argument("--mode", choices=["main", "locate"], default="main")
    common(sp)
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("bohr", help="build and analyse a Bohr set")
    sp.add_argument("--group", required=True)
    sp.add_argument("--freqs", required=True, help="Z_N: 1,57; products: 1,0;0,1")
    sp.add_argument("--width", type=float, required=True)
    sp.add_argument("--check-regular", action="store_true")
    sp.add_argument("--find-regular", action="store_true")
    sp.add_argument("--members", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_bohr)

    sp = sub.add_parser("increment", help="run the density-increment loop")
    sp.add_argument("--group", required=True)
    sp.add_argument("--system", required=True)
    sp.add_argument("--set", required=True)
    sp.add_argument("--epsilon", type=float, default=0.5)
    sp.add_argument("--budget-steps", type=int, default=20)
    sp.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--delta-spread", type=float)
    sp.add_argument("--p-cap", type=int)
    sp.add_argument("--shift-constant", type=float)
    sp.add_argument("--rho", type=float)
    common(sp)
    sp.set_defaults(func=cmd_increment)

    sp = sub.add_parser("construct", help="round G o Q to a spread set and certify it")
    sp.add_argument("--q", type=int, default=5)
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--system", required=True)
    sp.add_argument("--out")
    sp.add_argument("--r-list", default="1,2,4")
    sp.add_argument("--samples", type=int, default=0)
    sp.add_argument("--sample-r", type=float, default=2.0)
    sp.add_argument("--gamma", action="store_true", help="include the exact Gamma expansion")
    common(sp)
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("cayley", help="clique counts in a Cayley sum graph")
    sp.add_argument("--group")
    sp.add_argument("--set")
    sp.add_argument("--generator", choices=["greedy", "odd"])
    sp.add_argument("--clique", type=int, default=3)
    sp.add_argument("--sweep", help="comma-separated groups for a Turan-type sweep")
    sp.add_argument("--csv", help="CSV output for --sweep")
    sp.add_argument("--strict", action="store_true", help="reject even-order groups")
    common(sp)
    sp.set_defaults(func=cmd_cayley)

    sp = sub.add_parser("verify", help="replay every witness in a report")
    sp.add_argument("path")
    sp.set_defaults(func=cmd_verify)
    return p


def _run(args) -> int:
    if args.command == "cayley" and not args.sweep and not args.group:
        raise InputFormatError("command line", None, "cayley needs --group or --sweep")
    budget = getattr(args, "budget", None)
    if not budget:
        return args.func(args)
    saved = os.environ.get("PATTERNLAB_BUDGET")
    os.environ["PATTERNLAB_BUDGET"] = str(budget)
    try:
        return args.func(args)
    finally:
        if saved is None:
            del os.environ["PATTERNLAB_BUDGET"]
        else:
            os.environ["PATTERNLAB_BUDGET"] = saved


def main(argv=None) -> int:
    try:
        return _run(build_parser().parse_args(argv))
    except InputFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ResourceError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (VerificationError, InternalCheckError) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except PatternLabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
