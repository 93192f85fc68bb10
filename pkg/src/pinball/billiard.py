"""Symmetric 3-disk billiard in the C3v fundamental domain.

Disks have unit radius and sit on an equilateral triangle centred at the
origin; disk 0 is the fundamental-domain disk. A fundamental-domain orbit is
coded by a binary word: symbol ``0`` sends the particle back to the disk it
came from, symbol ``1`` sends it on to the third disk. Each word is unfolded
into a chain of full-domain bounces closed by the C3v element that maps the
final (previous, current) disk pair back onto the reference pair (1, 0).

Birkhoff coordinates live on disk 0 with the incoming direction from disk 1.
``q`` is the angle (arclength / r) measured counter-clockwise from the point
of disk 0 facing disk 1, ``p`` the tangential component of the outgoing unit
velocity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import (
    DegenerateMonodromy,
    EmptyOrbitSet,
    InadmissibleOrbit,
    InvalidWord,
    NoConvergence,
    NonPhysicalGeometry,
)

GRADIENT_TOL = 1e-12
REFLECTION_TOL = 1e-10
MAX_NEWTON_ITER = 100


def wrap_angle(x):
    """Map angles into [-pi, pi)."""
    return np.mod(np.asarray(x) + np.pi, 2.0 * np.pi) - np.pi


# ---------------------------------------------------------------------------
# Geometry and symmetry group
# ---------------------------------------------------------------------------


def _rotation(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s], [s, c]])


def _mirror(b):
    c, s = math.cos(2.0 * b), math.sin(2.0 * b)
    return np.array([[c, s], [s, -c]])


# (matrix, disk permutation, is_mirror); disk j sits at polar angle 2*pi*j/3
_GROUP = tuple(
    [(_rotation(2.0 * np.pi * m / 3.0), tuple((j + m) % 3 for j in range(3)), False) for m in range(3)]
    + [(_mirror(np.pi * m / 3.0), tuple((m - j) % 3 for j in range(3)), True) for m in range(3)]
)


def group_element(src: tuple[int, int], dst: tuple[int, int]) -> tuple[np.ndarray, bool]:
    """Unique C3v element mapping the ordered disk pair ``src`` onto ``dst``."""
    for mat, perm, mirror in _GROUP:
        if perm[src[0]] == dst[0] and perm[src[1]] == dst[1]:
            return mat, mirror
    raise ValueError(f"no group element maps {src} to {dst}")


@dataclass(frozen=True)
class DiskSystem:
    """Three unit disks with centre-to-centre distance ``d_over_r``."""

    d_over_r: float
    radius: float = 1.0
    centers: np.ndarray = field(default=None, compare=False, repr=False)

    @property
    def separation(self) -> float:
        return self.d_over_r * self.radius

    @property
    def base_angle(self) -> float:
        """Polar angle (about disk 0) of the Birkhoff base point."""
        v = self.centers[1] - self.centers[0]
        return math.atan2(v[1], v[0])


def build_system(d_over_r: float) -> DiskSystem:
    """Build the symmetric 3-disk geometry with r = 1.

    Raises NonPhysicalGeometry unless the disks are disjoint (d/r > 2).
    """
    d_over_r = float(d_over_r)
    if not math.isfinite(d_over_r) or d_over_r <= 2.0:
        raise NonPhysicalGeometry(f"d/r = {d_over_r} must exceed 2 (disks overlap or touch)")
    rho = d_over_r / math.sqrt(3.0)
    ang = 2.0 * np.pi * np.arange(3) / 3.0
    centers = rho * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    centers.setflags(write=False)
    return DiskSystem(d_over_r=d_over_r, radius=1.0, centers=centers)


# ---------------------------------------------------------------------------
# Symbolic words
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Word:
    symbols: str

    @property
    def n(self) -> int:
        return len(self.symbols)

    @property
    def n0(self) -> int:
        return self.symbols.count("0")

    @property
    def n1(self) -> int:
        return self.symbols.count("1")

    def __str__(self):
        return self.symbols


def is_prime_word(s: str) -> bool:
    """True if ``s`` is not a power of a shorter word."""
    n = len(s)
    return n > 0 and all(s != s[:d] * (n // d) for d in range(1, n) if n % d == 0)


def is_canonical_word(s: str) -> bool:
    return all(s <= s[i:] + s[:i] for i in range(1, len(s)))


def make_word(symbols: str | Word) -> Word:
    """Validate a prime canonical binary word."""
    if isinstance(symbols, Word):
        symbols = symbols.symbols
    if not symbols or set(symbols) - {"0", "1"}:
        raise InvalidWord(f"{symbols!r} is not a binary word")
    if not is_prime_word(symbols):
        raise InvalidWord(f"{symbols!r} is a repetition of a shorter word")
    if not is_canonical_word(symbols):
        raise InvalidWord(f"{symbols!r} is not the minimal cyclic rotation")
    return Word(symbols)


def enumerate_words(max_len: int) -> list[Word]:
    """All prime canonical binary words up to ``max_len`` (Duval's algorithm)."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    found = []
    w = [-1]
    while w:
        w[-1] += 1
        m = len(w)
        found.append("".join(map(str, w)))
        while len(w) < max_len:
            w.append(w[-m])
        while w and w[-1] == 1:
            w.pop()
    return [Word(s) for s in sorted(found, key=lambda s: (len(s), s))]


def unfold(word: Word | str) -> tuple[list[int], np.ndarray, bool]:
    """Full-domain disk itinerary of a word.

    Returns ``(disks, closing, mirror)`` where ``disks`` lists
    d_{-1}, d_0, ..., d_n and ``closing`` maps (d_{n-1}, d_n) onto (1, 0).
    """
    s = word.symbols if isinstance(word, Word) else word
    disks = [1, 0]
    for sym in s:
        prev, cur = disks[-2], disks[-1]
        disks.append(prev if sym == "0" else 3 - prev - cur)
    closing, mirror = group_element((disks[-2], disks[-1]), (1, 0))
    return disks, closing, mirror


# ---------------------------------------------------------------------------
# Periodic orbits
# ---------------------------------------------------------------------------


@dataclass
class PeriodicOrbit:
    word: Word
    theta: np.ndarray  # polar angle of each bounce on its own disk
    disks: tuple  # full-domain disk index per bounce
    positions: np.ndarray  # (n, 2) bounce points in the unfolded chain
    flights: np.ndarray  # (n,) flight lengths, flight k leaves bounce k
    incidence: np.ndarray  # (n,) signed incidence angle per bounce
    length: float
    residual: float
    reflection_error: float
    closing: np.ndarray = field(repr=False)
    mirror: bool = False
    monodromy: np.ndarray | None = None
    stability: float | None = None
    det_error: float | None = None
    section: tuple = ()

    @property
    def n_reflections(self) -> int:
        return self.word.n

    @property
    def n0(self) -> int:
        return self.word.n0

    @property
    def n1(self) -> int:
        return self.word.n1

    @property
    def lyapunov_ratio(self) -> float:
        return math.log(abs(self.stability)) / self.length


def _tangent(th):
    return np.array([-math.sin(th), math.cos(th)])


def _normal(th):
    return np.array([math.cos(th), math.sin(th)])


def _chain_points(system, theta, disks, closing):
    n = len(theta)
    pts = system.centers[disks[1 : n + 1]] + system.radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    end = closing.T @ pts[0]
    return np.vstack([pts, end])


def _length_derivatives(system, theta, disks, closing):
    """Total chord length with gradient and Hessian in the bounce angles."""
    n = len(theta)
    r = system.radius
    pts = _chain_points(system, theta, disks, closing)
    gi = closing.T
    total = 0.0
    grad = np.zeros(n)
    hess = np.zeros((n, n))
    for k in range(n):
        a_var, b_var = k, (k + 1) % n
        da, d2a = r * _tangent(theta[k]), -r * _normal(theta[k])
        db, d2b = r * _tangent(theta[b_var]), -r * _normal(theta[b_var])
        if k == n - 1:
            db, d2b = gi @ db, gi @ d2b
        diff = pts[k + 1] - pts[k]
        ell = float(np.hypot(*diff))
        u = diff / ell
        total += ell
        if a_var == b_var:
            parts = [(a_var, db - da, d2b - d2a)]
        else:
            parts = [(a_var, -da, -d2a), (b_var, db, d2b)]
        for i, di, d2i in parts:
            grad[i] += u @ di
            hess[i, i] += u @ d2i
            for j, dj, _ in parts:
                hess[i, j] += (di @ dj - (u @ di) * (u @ dj)) / ell
    return total, grad, hess


def _initial_angles(system, disks):
    n = len(disks) - 2
    c = system.centers
    theta = np.empty(n)
    for k in range(n):
        here, prev, nxt = disks[k + 1], disks[k], disks[k + 2]
        u = c[prev] - c[here]
        v = c[nxt] - c[here]
        b = u / np.linalg.norm(u) + v / np.linalg.norm(v)
        theta[k] = math.atan2(b[1], b[0])
    return theta


def _minimize_length(system, theta, disks, closing):
    n = len(theta)
    # coordinate-wise sweeps move the guess into the Newton basin
    for _ in range(3):
        for k in range(n):
            _, g, h = _length_derivatives(system, theta, disks, closing)
            if h[k, k] > 0:
                theta[k] -= g[k] / h[k, k]
    length, g, h = _length_derivatives(system, theta, disks, closing)
    for _ in range(MAX_NEWTON_ITER):
        gnorm = float(np.linalg.norm(g))
        if gnorm < GRADIENT_TOL:
            return _polish(system, theta, g, h, disks, closing)
        try:
            step = -np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            step = -g
        if step @ g >= 0:
            step = -g
        t = 1.0
        while True:
            trial = theta + t * step
            l2, g2, h2 = _length_derivatives(system, trial, disks, closing)
            if l2 <= length or gnorm < 1e-6 or t < 1e-8:
                break
            t *= 0.5
        theta, length, g, h = trial, l2, g2, h2
    gnorm = float(np.linalg.norm(g))
    if gnorm < GRADIENT_TOL:
        return theta, gnorm
    raise NoConvergence(f"gradient norm {gnorm:.3e} after {MAX_NEWTON_ITER} Newton steps")


def _polish(system, theta, g, h, disks, closing):
    # a few full Newton steps past tolerance, keeping the smallest gradient
    best, best_norm = theta, float(np.linalg.norm(g))
    for _ in range(3):
        theta = theta - np.linalg.solve(h, g)
        _, g, h = _length_derivatives(system, theta, disks, closing)
        gnorm = float(np.linalg.norm(g))
        if gnorm < best_norm:
            best, best_norm = theta, gnorm
    return best, best_norm


def _segment_distance(a, b, c):
    ab = b - a
    t = np.clip((c - a) @ ab / (ab @ ab), 0.0, 1.0)
    return float(np.linalg.norm(a + t * ab - c))


def find_orbit(system: DiskSystem, word: Word | str) -> PeriodicOrbit:
    """Solve the periodic orbit of a prime canonical word.

    The bounce angles minimise the total chord length of the unfolded chain.
    The returned orbit carries monodromy, stability and section points.
    """
    word = make_word(word)
    disks, closing, mirror = unfold(word)
    theta, gnorm = _minimize_length(system, _initial_angles(system, disks), disks, closing)
    theta = wrap_angle(theta)
    n = word.n
    pts = _chain_points(system, theta, disks, closing)
    seg = np.diff(pts, axis=0)
    flights = np.hypot(seg[:, 0], seg[:, 1])
    u = seg / flights[:, None]
    normals = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    tangents = np.stack([-np.sin(theta), np.cos(theta)], axis=1)

    c = system.centers
    for k in range(n):
        a_disk, b_disk = disks[k + 1], disks[k + 2]
        n_end = normals[(k + 1) % n] if k < n - 1 else closing.T @ normals[0]
        if u[k] @ normals[k] <= 0 or u[k] @ n_end >= 0:
            raise InadmissibleOrbit(f"{word}: flight {k} leaves or enters through a disk")
        for j in set(range(3)) - {a_disk, b_disk}:
            if _segment_distance(pts[k], pts[k + 1], c[j]) <= system.radius:
                raise InadmissibleOrbit(f"{word}: flight {k} crosses disk {j}")

    # incoming direction at bounce k, expressed in that bounce's frame
    incoming = np.vstack([closing @ u[n - 1], u[: n - 1]])
    refl_err = max(
        float(np.max(np.abs(np.sum((u - incoming) * tangents, axis=1)))),
        float(np.max(np.abs(np.sum((u + incoming) * normals, axis=1)))),
    )
    if refl_err > REFLECTION_TOL:
        raise NoConvergence(f"{word}: reflection law violated by {refl_err:.3e}")
    incidence = np.arctan2(np.sum(u * tangents, axis=1), np.sum(u * normals, axis=1))

    orbit = PeriodicOrbit(
        word=word,
        theta=theta,
        disks=tuple(disks[1 : n + 1]),
        positions=pts[:n],
        flights=flights,
        incidence=incidence,
        length=float(math.fsum(flights)),
        residual=gnorm,
        reflection_error=refl_err,
        closing=closing,
        mirror=mirror,
    )
    orbit.monodromy, orbit.stability = monodromy(system, orbit)
    orbit.section = tuple(birkhoff_coords(system, orbit))
    return orbit


def monodromy(system: DiskSystem, orbit: PeriodicOrbit) -> tuple[np.ndarray, float]:
    """Linearised fundamental-domain return map and its expanding eigenvalue.

    Flights contribute [[1, l], [0, 1]], reflections -[[1, 0], [2/(r cos phi), 1]]
    and a closing mirror flips the transverse frame. The product is formed in
    extended precision so that det(M) = 1 stays checkable for long orbits.
    """
    if orbit.residual >= 1e-10:
        raise NoConvergence(f"{orbit.word}: orbit residual {orbit.residual:.3e} too large")
    kappa = 1.0 / system.radius
    n = orbit.word.n
    with mpmath.workdps(40):
        m = mpmath.eye(2)
        for k in range(n):
            flight = mpmath.matrix([[1, orbit.flights[k]], [0, 1]])
            cphi = math.cos(orbit.incidence[(k + 1) % n])
            refl = -mpmath.matrix([[1, 0], [mpmath.mpf(2.0 * kappa) / cphi, 1]])
            m = refl * flight * m
        if orbit.mirror:
            m = -m
        det_err = float(abs(mpmath.det(m) - 1))
        mat = np.array([[float(m[i, j]) for j in range(2)] for i in range(2)])
        tr = m[0, 0] + m[1, 1]
        if abs(tr) <= 2:
            raise DegenerateMonodromy(f"{orbit.word}: |trace| = {float(abs(tr))} <= 2")
        lam = float((tr + mpmath.sign(tr) * mpmath.sqrt(tr * tr - 4)) / 2)
    orbit.det_error = det_err
    return mat, lam


def _to_section(system, point, velocity):
    rel = point - system.centers[0]
    ang = math.atan2(rel[1], rel[0])
    q = float(wrap_angle(ang - system.base_angle))
    p = float(velocity @ _tangent(ang))
    return q, p


def birkhoff_coords(system: DiskSystem, orbit: PeriodicOrbit) -> list[tuple[float, float]]:
    """One (q, p) per bounce, mapped into the fundamental domain."""
    disks, _, _ = unfold(orbit.word)
    n = orbit.word.n
    pts = np.vstack([orbit.positions, orbit.closing.T @ orbit.positions[0]])
    out = []
    for k in range(n):
        h, _ = group_element((disks[k], disks[k + 1]), (1, 0))
        v = pts[k + 1] - pts[k]
        v = v / np.linalg.norm(v)
        out.append(_to_section(system, h @ pts[k], h @ v))
    return out


# ---------------------------------------------------------------------------
# Numerically iterated return map
# ---------------------------------------------------------------------------


def bounce_map(system: DiskSystem, q: float, p: float):
    """Advance one bounce from the section point (q, p) on disk 0.

    Returns ``(q', p', symbol)``, or None if the trajectory escapes.
    """
    if abs(p) >= 1.0:
        return None
    c = system.centers
    r = system.radius
    ang = system.base_angle + q
    x = c[0] + r * _normal(ang)
    v = p * _tangent(ang) + math.sqrt(1.0 - p * p) * _normal(ang)
    best = None
    for j in (1, 2):
        rel = x - c[j]
        b = v @ rel
        disc = b * b - (rel @ rel - r * r)
        if disc < 0:
            continue
        t = -b - math.sqrt(disc)
        if t > 0 and (best is None or t < best[0]):
            best = (t, j)
    if best is None:
        return None
    t, j = best
    y = x + t * v
    nrm = (y - c[j]) / r
    v_out = v - 2.0 * (v @ nrm) * nrm
    h, _ = group_element((0, j), (1, 0))
    q2, p2 = _to_section(system, h @ y, h @ v_out)
    return q2, p2, "0" if j == 1 else "1"


def return_map(system: DiskSystem, q: float, p: float, n: int):
    """Iterate :func:`bounce_map` ``n`` times; returns (q, p, symbols) or None."""
    syms = []
    for _ in range(n):
        nxt = bounce_map(system, q, p)
        if nxt is None:
            return None
        q, p, s = nxt
        syms.append(s)
    return q, p, "".join(syms)


def _central_jacobian(system, q0, p0, n, step):
    jac = np.empty((2, 2))
    for col, (dq, dp) in enumerate(((step, 0.0), (0.0, step))):
        fwd = return_map(system, q0 + dq, p0 + dp, n)
        bwd = return_map(system, q0 - dq, p0 - dp, n)
        if fwd is None or bwd is None:
            raise NoConvergence("perturbed trajectory escaped")
        jac[0, col] = wrap_angle(fwd[0] - bwd[0]) / (2 * step)
        jac[1, col] = (fwd[1] - bwd[1]) / (2 * step)
    return jac


def finite_difference_stability(system: DiskSystem, orbit: PeriodicOrbit, step: float = 1e-6):
    """Largest eigenvalue of a finite-difference Jacobian of the n-bounce map.

    Central differences at ``step`` and ``step / 2`` combined by one Richardson
    step. Independent of the monodromy product; validates its sign convention.
    """
    q0, p0 = orbit.section[0]
    n = orbit.word.n
    coarse = _central_jacobian(system, q0, p0, n, step)
    fine = _central_jacobian(system, q0, p0, n, step / 2)
    jac = (4.0 * fine - coarse) / 3.0
    eig = np.linalg.eigvals(jac)
    lead = eig[np.argmax(np.abs(eig))]
    return float(lead.real), jac


# ---------------------------------------------------------------------------
# Orbit sets and statistics
# ---------------------------------------------------------------------------


def solve_orbits(system: DiskSystem, max_len: int) -> list[PeriodicOrbit]:
    """Solve every prime word up to ``max_len``, in word order."""
    return [find_orbit(system, w) for w in enumerate_words(max_len)]


@dataclass(frozen=True)
class HyperbolicityStats:
    h_top: float
    beta_min: float
    spread: float  # (max - min) / mean of log|Lambda| / L
    ratio_min: float
    ratio_max: float
    ratio_mean: float
    length_cover: float
    n_orbits: int


def hyperbolicity_stats(orbits: Sequence) -> HyperbolicityStats:
    """Entropy estimate, minimal expansion rate and pinching spread.

    ``orbits`` needs ``word``, ``length`` and ``stability`` attributes; the
    set is assumed complete up to its longest word.
    """
    orbits = list(orbits)
    if not orbits:
        raise EmptyOrbitSet("no orbits given")
    words = [o.word.symbols if isinstance(o.word, Word) else o.word for o in orbits]
    lengths = np.array([o.length for o in orbits], dtype=float)
    nsym = np.array([len(w) for w in words])
    ratios = np.log(np.abs([o.stability for o in orbits])) / lengths
    # every flight is at least as long as the per-symbol length of the shortest cycle
    cover = (nsym.max() + 1) * float(np.min(lengths / nsym))
    count = 0
    for length in lengths:
        count += int(math.ceil(cover / length)) - 1
    h_top = math.log(count) / cover if count > 0 else 0.0
    mean = float(ratios.mean())
    return HyperbolicityStats(
        h_top=h_top,
        beta_min=float(ratios.min()),
        spread=float((ratios.max() - ratios.min()) / mean),
        ratio_min=float(ratios.min()),
        ratio_max=float(ratios.max()),
        ratio_mean=mean,
        length_cover=cover,
        n_orbits=len(orbits),
    )


def words_of(orbits: Iterable) -> list[str]:
    return [o.word.symbols if isinstance(o.word, Word) else str(o.word) for o in orbits]
