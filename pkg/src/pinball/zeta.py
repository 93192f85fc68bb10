"""Cycle expansions of weighted zeta functions and their zeros.

A prime cycle p contributes the weight

    t_p(lam) = s_p * exp(-lam * L_p) * |Lambda_p|**-0.5 * Lambda_p**-k

for band k, with s_p the product of the reflection sign (-1)**n_p and the
representation character. The band-k inverse zeta function is the finite
sum over pseudo-cycles (sets of distinct primes with total symbol count
<= N) of (-1)**#set * prod(t_p). A weight function enters through
t_p -> t_p * exp(eps * A_p); residues of the weighted zeta function
Z_a = -d/deps log D follow as -dD/deps / dD/dlam at a simple zero of D.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse

from .billiard import Word, enumerate_words
from .errors import MissingOrbits, MissingWeight, NonSimpleZero

SIMPLE_ZERO_TOL = 1e-12
ZERO_TOL = 1e-10
DEDUP_RADIUS = 1e-8


def _symbols(word) -> str:
    return word.symbols if isinstance(word, Word) else str(word)


@dataclass(frozen=True)
class CycleWeightSpec:
    representation: str = "A2"
    maslov: bool = True
    band: int = 0

    def __post_init__(self):
        if self.representation not in ("A1", "A2"):
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.band < 0:
            raise ValueError("band must be >= 0")

    def sign(self, word) -> int:
        s = _symbols(word)
        out = 1
        if self.maslov and len(s) % 2:
            out = -out
        if self.representation == "A2" and s.count("0") % 2:
            out = -out
        return out


@dataclass(frozen=True)
class Resonance:
    lam: complex
    residual: float
    order: int
    band: int = 0
    reliable: bool | None = None

    @property
    def k(self) -> complex:
        return 1j * self.lam

    @property
    def energy(self) -> complex:
        return self.k * self.k


def convert(lam: complex) -> tuple[complex, complex]:
    """Wavenumber k = i*lam and energy E = k**2."""
    k = 1j * complex(lam)
    return k, k * k


def lam_from_k(k):
    """Inverse of the k = i*lam convention; accepts scalars or arrays."""
    if np.ndim(k):
        return -1j * np.asarray(k, dtype=complex)
    return -1j * complex(k)


class CycleExpansion:
    """Truncated pseudo-cycle expansion of one band's inverse zeta function."""

    def __init__(self, spec, order, words, lengths, stabilities, sections, pseudo_cycles):
        self.spec = spec
        self.order = int(order)
        self.words = tuple(words)
        self.lengths = np.asarray(lengths, dtype=float)
        stab = np.asarray(stabilities, dtype=float)
        self.log_stability = np.log(np.abs(stab))
        self.stability_sign = np.sign(stab)
        self.nsym = np.array([len(w) for w in self.words], dtype=int)
        self.signs = np.array([spec.sign(w) for w in self.words], dtype=float)
        self.sections = tuple(tuple(map(tuple, s)) for s in sections)
        self.pseudo_cycles = tuple(pseudo_cycles)

        k = spec.band
        # per-prime pieces of t_p: sign, length and log-amplitude
        prime_sign = -self.signs * self.stability_sign**k
        prime_logamp = (0.5 + k) * self.log_stability
        n_pc = len(self.pseudo_cycles)
        self.pc_length = np.zeros(n_pc)
        self.pc_logamp = np.zeros(n_pc)
        self.pc_sign = np.ones(n_pc)
        self.pc_nsym = np.zeros(n_pc, dtype=int)
        rows, cols = [], []
        for i, pc in enumerate(self.pseudo_cycles):
            idx = list(pc)
            self.pc_length[i] = math.fsum(self.lengths[idx])
            self.pc_logamp[i] = math.fsum(prime_logamp[idx])
            self.pc_sign[i] = np.prod(prime_sign[idx])
            self.pc_nsym[i] = int(self.nsym[idx].sum())
            rows.extend([i] * len(idx))
            cols.extend(idx)
        self.incidence = sparse.csr_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(n_pc, len(self.words))
        )

    def __len__(self):
        return len(self.pseudo_cycles)

    @property
    def n_primes(self) -> int:
        return len(self.words)

    def terms(self, lam):
        """Pseudo-cycle terms at ``lam``; shape ``lam.shape + (n_pc,)``."""
        lam = np.asarray(lam, dtype=complex)[..., None]
        return self.pc_sign * np.exp(-lam * self.pc_length - self.pc_logamp)

    def weight_vector(self, weights) -> np.ndarray:
        """Weights aligned with ``self.words`` from a mapping or a sequence."""
        if isinstance(weights, Mapping):
            missing = [w for w in self.words if w not in weights]
            if missing:
                raise MissingWeight(f"no weight for primes {missing[:5]}")
            return np.array([weights[w] for w in self.words], dtype=float)
        arr = np.asarray(weights, dtype=float)
        if arr.shape != (self.n_primes,):
            raise MissingWeight(f"expected {self.n_primes} weights, got shape {arr.shape}")
        return arr

    def mean_symbol_length(self) -> float:
        if not self.n_primes:
            return 1.0
        return float(np.mean(self.lengths / self.nsym))


def _pseudo_cycles(nsym: Sequence[int], order: int) -> list[tuple[int, ...]]:
    out = [()]

    def extend(start, subset, total):
        for i in range(start, len(nsym)):
            t = total + nsym[i]
            if t <= order:
                cur = subset + (i,)
                out.append(cur)
                extend(i + 1, cur, t)

    extend(0, (), 0)
    return sorted(out, key=lambda s: (sum(nsym[i] for i in s), len(s), s))


def build_expansion(orbits: Sequence, spec: CycleWeightSpec | None = None, order: int | None = None) -> CycleExpansion:
    """Cycle expansion of order ``order`` from a set of prime orbits.

    ``orbits`` items need ``word``, ``length``, ``stability`` and ``section``.
    Raises MissingOrbits if some prime word up to ``order`` has no orbit.
    """
    spec = spec or CycleWeightSpec()
    by_word = {_symbols(o.word): o for o in orbits}
    if order is None:
        order = max((len(w) for w in by_word), default=0)
    words = [w.symbols for w in enumerate_words(order)] if order >= 1 else []
    missing = [w for w in words if w not in by_word]
    if missing:
        raise MissingOrbits(f"{len(missing)} prime words up to length {order} lack orbits, e.g. {missing[:3]}")
    chosen = [by_word[w] for w in words]
    nsym = [len(w) for w in words]
    return CycleExpansion(
        spec=spec,
        order=order,
        words=words,
        lengths=[o.length for o in chosen],
        stabilities=[o.stability for o in chosen],
        sections=[o.section for o in chosen],
        pseudo_cycles=_pseudo_cycles(nsym, order),
    )


def evaluate(expansion: CycleExpansion, lam):
    """Inverse zeta function D(lam) and its analytic lam-derivative."""
    t = expansion.terms(lam)
    return t.sum(axis=-1), -(t @ expansion.pc_length)


def weight_derivative(expansion: CycleExpansion, lam, weights):
    """dD/deps at eps = 0 for t_p -> t_p * exp(eps * A_p)."""
    a = expansion.weight_vector(weights)
    return expansion.terms(lam) @ (expansion.incidence @ a)


def _coefficient_array(expansion, lam0):
    lam0 = complex(lam0)
    _, dd = evaluate(expansion, lam0)
    if abs(dd) <= SIMPLE_ZERO_TOL:
        raise NonSimpleZero(f"|dD/dlam| = {abs(dd):.3e} at lam = {lam0}")
    t = expansion.terms(lam0)
    return -(expansion.incidence.T @ t) / dd


def residue(expansion: CycleExpansion, lam0, weights) -> complex:
    """Residue of the weighted zeta function at a simple zero ``lam0``."""
    lam0 = complex(lam0)
    _, dd = evaluate(expansion, lam0)
    if abs(dd) <= SIMPLE_ZERO_TOL:
        raise NonSimpleZero(f"|dD/dlam| = {abs(dd):.3e} at lam = {lam0}")
    return complex(-weight_derivative(expansion, lam0, weights) / dd)


def residue_coefficients(expansion: CycleExpansion, lam0) -> dict[str, complex]:
    """Coefficients c_p with residue(A) = sum_p c_p * A_p."""
    c = _coefficient_array(expansion, lam0)
    return {w: complex(v) for w, v in zip(expansion.words, c)}


def weighted_zeta(expansions: Sequence[CycleExpansion], lam, weights) -> complex:
    """-d/deps log D for D = prod_k (1/zeta_k)**(k + 1) over the given bands."""
    total = 0.0
    for exp_k in expansions:
        d, _ = evaluate(exp_k, lam)
        total = total - (exp_k.spec.band + 1) * weight_derivative(exp_k, lam, weights) / d
    return total


def partial_sum_zeta(orbits: Sequence, lam, weights, max_length: float, spec: CycleWeightSpec | None = None) -> complex:
    """Direct orbit sum of the weighted zeta function over all L_gamma <= max_length.

    Repetitions of every prime are summed explicitly, using
    |det(1 - P)| = |Lambda| * (1 - 1/Lambda)**2 for the r-th repetition.
    """
    spec = spec or CycleWeightSpec()
    if isinstance(weights, Mapping):
        a = [weights[_symbols(o.word)] for o in orbits]
    else:
        a = list(weights)
    lam = complex(lam)
    total = 0j
    for orbit, ap in zip(orbits, a):
        if ap == 0:
            continue
        s = spec.sign(orbit.word)
        loglam = math.log(abs(orbit.stability))
        r = 1
        while r * orbit.length <= max_length:
            inv_r = (1.0 / orbit.stability) ** r  # underflows to 0 rather than overflowing
            amp = cmath.exp(-lam * r * orbit.length - 0.5 * r * loglam)
            total += s**r * amp / (1.0 - inv_r) ** 2 * ap
            r += 1
    return complex(total)


def band0_validity(stats) -> float:
    """Re(lam) above which band 0 alone fixes poles and residues."""
    return stats.h_top - 1.5 * stats.beta_min


def find_resonances(
    expansion: CycleExpansion,
    region: tuple[float, float, float, float],
    density: float = 2.0,
    max_iter: int = 50,
    threshold: float | None = None,
) -> list[Resonance]:
    """Zeros of the expansion inside a k-plane rectangle (re0, re1, im0, im1).

    Newton's method in k runs from a rectangular seed grid whose spacing is
    the expected resonance spacing 2*pi/<L> divided by ``2 * density``.
    Only Re k >= 0 is searched. ``threshold`` sets the band-0 reliability flag.
    """
    re0, re1, im0, im1 = map(float, region)
    re0 = max(re0, 0.0)
    if expansion.n_primes == 0 or re1 < re0 or im1 < im0:
        return []
    spacing = 2.0 * np.pi / expansion.mean_symbol_length() / (2.0 * density)
    nre = max(int(math.ceil((re1 - re0) / spacing)), 1)
    nim = max(int(math.ceil((im1 - im0) / spacing)), 1)
    kr = re0 + (np.arange(nre) + 0.5) * (re1 - re0) / nre
    ki = im0 + (np.arange(nim) + 0.5) * (im1 - im0) / nim
    k = (kr[:, None] + 1j * ki[None, :]).ravel()

    active = np.ones(k.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        d, dd = evaluate(expansion, lam_from_k(k[active]))
        with np.errstate(divide="ignore", invalid="ignore"):
            step = d / (-1j * dd)
        bad = ~np.isfinite(step)
        step[bad] = 0.0
        big = np.abs(step) > spacing
        step[big] *= spacing / np.abs(step[big])
        idx = np.flatnonzero(active)
        k[idx] -= step
        done = (np.abs(step) < 1e-14 * np.maximum(1.0, np.abs(k[idx]))) | bad
        active[idx[done]] = False

    d, dd = evaluate(expansion, lam_from_k(k))
    resid = np.abs(d)
    ok = (resid < ZERO_TOL) & np.isfinite(k)
    ok &= (k.real >= re0) & (k.real <= re1) & (k.imag >= im0) & (k.imag <= im1)
    cand = sorted(zip(k[ok], resid[ok]), key=lambda z: (z[0].real, z[0].imag))
    out: list[Resonance] = []
    for kk, rr in cand:
        if any(abs(kk - r.k) < DEDUP_RADIUS for r in out):
            continue
        lam = lam_from_k(kk)
        reliable = None if threshold is None else bool(lam.real > threshold)
        out.append(Resonance(lam=lam, residual=float(rr), order=expansion.order, band=expansion.spec.band, reliable=reliable))
    return out


def refine_resonance(expansion: CycleExpansion, k0: complex, max_iter: int = 50) -> Resonance | None:
    """Newton-polish a single zero starting from wavenumber ``k0``."""
    k = complex(k0)
    for _ in range(max_iter):
        d, dd = evaluate(expansion, lam_from_k(k))
        if dd == 0:
            return None
        step = complex(d / (-1j * dd))
        k -= step
        if abs(step) < 1e-14 * max(1.0, abs(k)):
            break
    d, _ = evaluate(expansion, lam_from_k(k))
    if not abs(d) < ZERO_TOL:
        return None
    return Resonance(lam=lam_from_k(k), residual=float(abs(d)), order=expansion.order, band=expansion.spec.band)
