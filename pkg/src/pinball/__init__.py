"""Ruelle resonances and invariant Ruelle distributions of the symmetric 3-disk billiard."""

from .billiard import (
    DiskSystem,
    PeriodicOrbit,
    Word,
    build_system,
    enumerate_words,
    find_orbit,
    hyperbolicity_stats,
    make_word,
    solve_orbits,
)
from .config import RunConfig, resolve_config
from .ruelle_map import GaussianProbe, ResidueMap, default_sigma, residue_map
from .zeta import (
    CycleExpansion,
    CycleWeightSpec,
    Resonance,
    build_expansion,
    evaluate,
    find_resonances,
    residue,
    residue_coefficients,
)

__version__ = "0.1.0"
