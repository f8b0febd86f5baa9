"""Bohr-set sizes and regular dilates for random frequencies in Z_N."""
import argparse

import numpy as np

from patternlab.bohr import bohr_build, find_regular_dilate
from patternlab.groups import GroupDescriptor


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=9973)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--max-rank", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    g = GroupDescriptor.cyclic(args.N)
    r = np.random.default_rng(args.seed)
    print(f"{'rank':>4} {'width':>6} {'|B|':>6} {'rho':>7} {'|B_rho|':>7} {'floor':>9} {'regular':>7}")
    for _ in range(args.trials):
        freqs = [int(x) for x in r.integers(1, args.N, size=int(r.integers(1, args.max_rank + 1)))]
        B = bohr_build(g, freqs, float(r.uniform(0.2, 2)))
        rd = find_regular_dilate(B)
        floor = (rd.rho / 4) ** B.rank * B.size
        print(f"{B.rank:>4} {B.width:>6.3f} {B.size:>6} {rd.rho:>7.4f} {rd.bohr.size:>7} {floor:>9.2f} {str(rd.passed):>7}")


if __name__ == "__main__":
    main()
