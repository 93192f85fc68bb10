"""Resonances in a k-plane window at two truncation orders and their drift.

    python scripts/resonance_spectrum.py --window 100 200 --orders 8 10
"""

import argparse

import numpy as np

from pinball.billiard import build_system, hyperbolicity_stats, solve_orbits
from pinball.zeta import CycleWeightSpec, band0_validity, build_expansion, find_resonances, refine_resonance


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--ratio", type=float, default=6.0)
    ap.add_argument("--window", type=float, nargs=2, default=[100.0, 200.0])
    ap.add_argument("--orders", type=int, nargs=2, default=[8, 10])
    ap.add_argument("--rep", default="A2")
    args = ap.parse_args()

    lo, hi = args.orders
    orbits = solve_orbits(build_system(args.ratio), hi)
    thr = band0_validity(hyperbolicity_stats(orbits))
    spec = CycleWeightSpec(args.rep, maslov=True)
    e_lo, e_hi = build_expansion(orbits, spec, lo), build_expansion(orbits, spec, hi)
    zeros = find_resonances(e_lo, (*args.window, thr, 0.0), threshold=thr)
    print(f"band-0 strip Im k > {thr:.4f}; {len(zeros)} zeros at N={lo}")

    # drift binned by depth below the real axis
    edges = np.arange(0.0, thr - 0.05, -0.05)
    rows = []
    for r in zeros:
        moved = refine_resonance(e_hi, r.k)
        rows.append((r.k.imag, abs(moved.k - r.k) if moved is not None else np.inf))
    rows = np.array(rows)
    print(f"{'Im k range':>18} {'count':>6} {'max drift':>10} {'< 1e-6':>7}")
    for top, bottom in zip(edges[:-1], edges[1:]):
        sel = rows[(rows[:, 0] <= top) & (rows[:, 0] > bottom)]
        if len(sel):
            print(f"  ({bottom:6.2f}, {top:5.2f}] {len(sel):6d} {sel[:, 1].max():10.2e} {int((sel[:, 1] < 1e-6).sum()):7d}")


if __name__ == "__main__":
    main()
