"""Command-line front end: orbits -> resonances -> residue maps -> comparisons.

Every subcommand resolves a :class:`~pinball.config.RunConfig` from defaults,
an optional ``--config`` file and explicit flags (in increasing priority)
and writes its artifact under ``--out``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import spectra_io
from .billiard import hyperbolicity_stats
from .config import RunConfig, parse_bool, parse_grid, parse_region, resolve_config
from .errors import PinballError, UnknownResonance
from .ruelle_map import residue_map
from .zeta import CycleWeightSpec, band0_validity, build_expansion, find_resonances, refine_resonance

log = logging.getLogger("pinball")

# k-plane distance within which --k selects a stored resonance
SELECT_RADIUS = 1e-3


def _tag(cfg: RunConfig) -> str:
    return f"dR{cfg.d_over_r:g}_N{cfg.max_len}_{cfg.representation}_{'m' if cfg.maslov else 'nom'}"


def resonance_path(cfg: RunConfig) -> Path:
    return Path(cfg.out) / f"resonances_{_tag(cfg)}.csv"


def load_orbits(cfg: RunConfig):
    return spectra_io.cached_orbits(cfg.d_over_r, cfg.max_len, cfg.cache_dir, log=log.info)


def cmd_orbits(cfg: RunConfig) -> Path:
    orbits = load_orbits(cfg)
    path = spectra_io.save_orbit_db(Path(cfg.out) / spectra_io.orbit_db_filename(cfg.d_over_r, cfg.max_len), cfg.d_over_r, cfg.max_len, orbits)
    st = hyperbolicity_stats(orbits)
    print(f"primes        {st.n_orbits}")
    print(f"beta_min      {st.beta_min:.6f}")
    print(f"h_top         {st.h_top:.6f}  (orbit lengths up to {st.length_cover:.4g})")
    print(f"ratio spread  {100 * st.spread:.3f}% peak-to-peak  [{st.ratio_min:.6f}, {st.ratio_max:.6f}]")
    print(f"band-0 strip  Re(lambda) > {band0_validity(st):.6f}")
    print(f"wrote {path}")
    return path


def compute_resonances(cfg: RunConfig):
    orbits = load_orbits(cfg)
    threshold = band0_validity(hyperbolicity_stats(orbits))
    found = []
    for band in range(cfg.bands):
        spec = CycleWeightSpec(cfg.representation, cfg.maslov, band)
        exp = build_expansion(orbits, spec, cfg.max_len)
        found.extend(find_resonances(exp, cfg.region, density=cfg.density, threshold=threshold))
    found.sort(key=lambda r: (r.k.real, r.k.imag, r.band))
    return found


def cmd_resonances(cfg: RunConfig) -> Path:
    res = compute_resonances(cfg)
    path = spectra_io.save_resonances(resonance_path(cfg), res)
    print(f"{len(res)} resonances in region {cfg.region}")
    for r in res:
        flag = "" if r.reliable else "  (outside band-0 strip)"
        print(f"  k = {r.k.real:.9f} {r.k.imag:+.9f}i  band {r.band}{flag}")
    print(f"wrote {path}")
    return path


def select_resonance(resonances, k=None, index=None):
    if index is not None:
        if not 0 <= index < len(resonances):
            raise UnknownResonance(f"index {index} out of range (have {len(resonances)})")
        return resonances[index]
    if k is None:
        raise UnknownResonance("select a resonance with --k or --index")
    best = min(resonances, key=lambda r: abs(r.k - k), default=None)
    if best is None or abs(best.k - k) > SELECT_RADIUS:
        raise UnknownResonance(f"no stored resonance within {SELECT_RADIUS} of k = {k}")
    return best


def cmd_residue_map(cfg: RunConfig, k=None, index=None, pgm=False) -> Path:
    path = resonance_path(cfg)
    if not path.exists():
        cmd_resonances(cfg)
    chosen = select_resonance(spectra_io.load_resonances(path), k, index)
    orbits = load_orbits(cfg)
    exp = build_expansion(orbits, CycleWeightSpec(cfg.representation, cfg.maslov, chosen.band), cfg.max_len)
    # the CSV holds 12 significant digits; polish back onto the exact zero
    res = refine_resonance(exp, chosen.k)
    if res is None:
        raise UnknownResonance(f"k = {chosen.k} is not a zero of the order-{cfg.max_len} expansion")
    meta = {"d_over_r": cfg.d_over_r, "representation": cfg.representation, "maslov": cfg.maslov, "order": cfg.max_len}
    rmap = residue_map(exp, res, grid=cfg.grid, sigma=cfg.sigma, metadata=meta)
    out = Path(cfg.out) / f"map_{_tag(cfg)}_k{res.k.real:.6f}_{res.k.imag:.6f}.csv"
    spectra_io.save_map(out, rmap, pgm=pgm)
    print(f"k = {res.k.real:.9f} {res.k.imag:+.9f}i, sigma = {rmap.sigma:.6g}, grid {cfg.grid[0]}x{cfg.grid[1]}")
    print(f"wrote {out}")
    return out


def cmd_compare(cfg: RunConfig, quantum_csv, radius: float = 0.1) -> Path:
    quantum = spectra_io.load_quantum_csv(quantum_csv)
    path = resonance_path(cfg)
    if not path.exists():
        cmd_resonances(cfg)
    classical = spectra_io.load_resonances(path)
    report = spectra_io.match_spectra(classical, quantum, radius)
    out = spectra_io.save_report(Path(cfg.out) / f"comparison_{_tag(cfg)}.json", report)
    st = report.stats
    print(f"matched {st['n_matched']}, unmatched classical {st['n_unmatched_classical']}, unmatched quantum {st['n_unmatched_quantum']}")
    if st["n_matched"]:
        print(f"distance max {st['max_distance']:.3g}, mean {st['mean_distance']:.3g}")
    print(f"wrote {out}")
    return out


def _complex(text: str) -> complex:
    parts = text.split(",")
    if len(parts) == 2:
        return complex(float(parts[0]), float(parts[1]))
    return complex(text.replace(" ", ""))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with a [run] section")
    common.add_argument("--d-over-r", type=float, dest="d_over_r")
    common.add_argument("--rep", choices=["A1", "A2"], dest="representation")
    common.add_argument("--maslov", type=parse_bool, metavar="on|off")
    common.add_argument("--max-len", type=int, dest="max_len")
    common.add_argument("--bands", type=int)
    common.add_argument("--region", type=parse_region, metavar="re0,re1,im0,im1")
    common.add_argument("--density", type=float)
    common.add_argument("--grid", type=parse_grid, metavar="NQxNP")
    common.add_argument("--sigma", metavar="auto|VALUE")
    common.add_argument("--out")
    common.add_argument("--cache", help="orbit cache directory (PINBALL_CACHE overrides)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pinball", description="Ruelle resonances of the symmetric 3-disk billiard")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("orbits", parents=[common], help="solve prime periodic orbits and print hyperbolicity stats")
    sub.add_parser("resonances", parents=[common], help="find zeros of the cycle expansion in a k-plane region")
    p = sub.add_parser("residue-map", parents=[common], help="Gaussian-smoothed invariant distribution of one resonance")
    p.add_argument("--k", type=_complex, help="resonance wavenumber, e.g. 10000.9834,-0.2065")
    p.add_argument("--index", type=int, help="row of the resonance CSV (0-based)")
    p.add_argument("--pgm", action="store_true", help="also write a PGM heatmap of |value|")
    p = sub.add_parser("compare", parents=[common], help="match classical resonances against a quantum CSV")
    p.add_argument("quantum_csv")
    p.add_argument("--radius", type=float, default=0.1)
    return parser


CONFIG_KEYS = ("d_over_r", "representation", "maslov", "max_len", "bands", "region", "density", "grid", "sigma", "out", "cache")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args.config, {k: getattr(args, k) for k in CONFIG_KEYS})
        if args.command == "orbits":
            cmd_orbits(cfg)
        elif args.command == "resonances":
            cmd_resonances(cfg)
        elif args.command == "residue-map":
            cmd_residue_map(cfg, k=args.k, index=args.index, pgm=args.pgm)
        elif args.command == "compare":
            cmd_compare(cfg, args.quantum_csv, args.radius)
    except (PinballError, ValueError, LookupError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
