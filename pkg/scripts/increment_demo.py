"""Density-increment loop on Z_N with the binary 3AP system.

Runs a random set and an interval of the same density, printing each step.
"""
import argparse

import numpy as np

from patternlab.groups import GroupDescriptor
from patternlab.increment import PRESETS, run_increment_loop
from patternlab.linear_systems import ap3_binary


def show(label, trace) -> None:
    print(f"{label}: {trace.verdict} ({trace.reason})")
    print(f"  start density {trace.initial_density:.4f}")
    for s in trace.steps:
        print(f"  step {s.index}: {s.mechanism:<16} rank {len(s.bohr['frequencies'])}, density {s.density:.4f} (x{s.factor:.3f})")
    if trace.certificate:
        c = trace.certificate
        print(f"  certificate: t = {c.t:.5g} >= target {c.target:.5g}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=1009)
    ap.add_argument("--alpha", type=float, default=0.4)
    ap.add_argument("--eps", type=float, default=0.5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    args = ap.parse_args()
    g = GroupDescriptor.cyclic(args.N)
    size = round(args.alpha * args.N)
    rnd = np.zeros(args.N, dtype=bool)
    rnd[np.random.default_rng(args.seed).choice(args.N, size, replace=False)] = True
    interval = np.arange(args.N) < size
    cfg = PRESETS[args.preset]
    show("random set", run_increment_loop(g, rnd, ap3_binary(), args.eps, cfg))
    show("interval", run_increment_loop(g, interval, ap3_binary(), args.eps, cfg))


if __name__ == "__main__":
    main()
