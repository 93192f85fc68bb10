"""Spread of log|Lambda|/L over all prime cycles up to a given length.

    python scripts/pinching.py --max-len 12 --ratios 6 3
"""

import argparse
import time

from pinball.billiard import build_system, hyperbolicity_stats, solve_orbits
from pinball.zeta import band0_validity


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--max-len", type=int, default=12)
    ap.add_argument("--ratios", type=float, nargs="+", default=[6.0, 3.0])
    args = ap.parse_args()

    print(f"{'d/r':>5} {'primes':>7} {'beta_min':>9} {'ratio max':>9} {'spread':>8} {'h_top':>7} {'band-0':>8} {'time':>6}")
    for ratio in args.ratios:
        t0 = time.perf_counter()
        orbits = solve_orbits(build_system(ratio), args.max_len)
        st = hyperbolicity_stats(orbits)
        dt = time.perf_counter() - t0
        print(
            f"{ratio:5g} {st.n_orbits:7d} {st.beta_min:9.5f} {st.ratio_max:9.5f} "
            f"{100 * st.spread:7.3f}% {st.h_top:7.4f} {band0_validity(st):8.4f} {dt:5.1f}s"
        )


if __name__ == "__main__":
    main()
