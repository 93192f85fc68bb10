"""Gaussian-smoothed invariant Ruelle distributions on the bounce section.

The smoothing parameter ``sigma`` is the variance of the Gaussian family,
so the kernel's standard deviation is ``sqrt(sigma)``; with the default
``sigma = 1/Re(k)`` the kernel width tracks the coherent-state resolution
``1/sqrt(k)``. Gaussians are normalised to unit mass on the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .billiard import wrap_angle
from .errors import NonPositiveFrequency
from .zeta import CycleExpansion, Resonance, _coefficient_array


@dataclass(frozen=True)
class GaussianProbe:
    """Unit-mass Gaussian centred at (q0, p0) with standard deviation ``width``."""

    q0: float
    p0: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")
        if not -math.pi <= self.q0 <= math.pi or not -1.0 <= self.p0 <= 1.0:
            raise ValueError(f"probe centre ({self.q0}, {self.p0}) outside the section")
        # q = pi and q = -pi are the same point; store one representative
        object.__setattr__(self, "q0", float(wrap_angle(self.q0)))

    def __call__(self, q, p):
        dq = wrap_angle(np.asarray(q) - self.q0)
        dp = np.asarray(p) - self.p0
        norm = 1.0 / (2.0 * math.pi * self.width**2)
        return norm * np.exp(-(dq * dq + dp * dp) / (2.0 * self.width**2))

    @classmethod
    def from_sigma(cls, q0, p0, sigma):
        """Probe for smoothing variance ``sigma``."""
        return cls(q0, p0, kernel_width(sigma))


def section_weight(orbit, observable: Callable) -> float:
    """Sum of ``observable(q, p)`` over the bounce points of a prime orbit."""
    pts = np.asarray(orbit.section, dtype=float).reshape(-1, 2)
    return float(np.sum(observable(pts[:, 0], pts[:, 1])))


def probe_weight(orbit, probe: GaussianProbe) -> float:
    return section_weight(orbit, probe)


def kernel_width(sigma: float) -> float:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return math.sqrt(sigma)


def default_sigma(resonance) -> float:
    """Smoothing variance 1/Re(k) for a resonance (or a bare wavenumber)."""
    k = resonance.k if isinstance(resonance, Resonance) else complex(resonance)
    if not k.real > 0:
        raise NonPositiveFrequency(f"Re(k) = {k.real} must be positive")
    return 1.0 / k.real


def grid_axes(n_q: int, n_p: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centred nodes over [-pi, pi] x [-1, 1]."""
    if n_q < 1 or n_p < 1:
        raise ValueError("grid dimensions must be >= 1")
    q = -math.pi + (np.arange(n_q) + 0.5) * (2.0 * math.pi / n_q)
    p = -1.0 + (np.arange(n_p) + 0.5) * (2.0 / n_p)
    return q, p


@dataclass
class ResidueMap:
    resonance: Resonance
    sigma: float
    q: np.ndarray
    p: np.ndarray
    values: np.ndarray  # shape (n_q, n_p)
    metadata: dict = field(default_factory=dict)

    @property
    def width(self) -> float:
        return kernel_width(self.sigma)

    @property
    def cell_area(self) -> float:
        return (2.0 * math.pi / len(self.q)) * (2.0 / len(self.p))

    def pair(self, observable: Callable) -> complex:
        """Midpoint-rule integral of map * observable over the section."""
        qq, pp = np.meshgrid(self.q, self.p, indexing="ij")
        return complex(np.sum(self.values * observable(qq, pp)) * self.cell_area)


def _bounce_table(expansion: CycleExpansion, coeffs: np.ndarray):
    q, p, w = [], [], []
    for c, sec in zip(coeffs, expansion.sections):
        for qi, pi in sec:
            q.append(qi)
            p.append(pi)
            w.append(c)
    return np.array(q), np.array(p), np.array(w, dtype=complex)


def residue_map(
    expansion: CycleExpansion,
    resonance: Resonance,
    grid: tuple[int, int] = (400, 200),
    sigma: float | None = None,
    metadata: dict | None = None,
) -> ResidueMap:
    """Evaluate t(q, p) = residue of the weighted zeta function for a Gaussian probe at (q, p).

    The residue is linear in the per-orbit weights, so coefficients are
    computed once and the Gaussians are separable in q and p.
    """
    sigma = default_sigma(resonance) if sigma is None else float(sigma)
    w2 = kernel_width(sigma) ** 2
    coeffs = _coefficient_array(expansion, resonance.lam)
    bq, bp, bw = _bounce_table(expansion, coeffs)
    q, p = grid_axes(*grid)
    gq = np.exp(-wrap_angle(q[:, None] - bq[None, :]) ** 2 / (2.0 * w2))
    gp = np.exp(-((p[:, None] - bp[None, :]) ** 2) / (2.0 * w2))
    values = (gq * bw[None, :]) @ gp.T / (2.0 * math.pi * w2)
    meta = {"representation": expansion.spec.representation, "order": expansion.order}
    meta.update(metadata or {})
    return ResidueMap(resonance=resonance, sigma=sigma, q=q, p=p, values=values, metadata=meta)


def localized_mass_fraction(rmap: ResidueMap, points, radius: float) -> float:
    """Share of sum |values| on nodes within ``radius`` of any of ``points``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    mag = np.abs(rmap.values)
    total = mag.sum()
    if total == 0:
        return 0.0
    # periodic images in q so a plain KD-tree handles the wrap-around
    images = np.concatenate([pts + [shift, 0.0] for shift in (-2 * math.pi, 0.0, 2 * math.pi)])
    tree = cKDTree(images)
    qq, pp = np.meshgrid(rmap.q, rmap.p, indexing="ij")
    dist, _ = tree.query(np.stack([qq.ravel(), pp.ravel()], axis=1))
    near = (dist <= radius).reshape(mag.shape)
    return float(mag[near].sum() / total)
