"""Stationary SNR distributions of a flat block-fading channel.

Besides pdf/cdf/inverse-cdf each model exposes the region integrals the
designers need: probability mass, 1/SNR-weighted mass and the stepwise
(discrete power) mass. The base class evaluates them by quadrature;
:class:`Rayleigh` overrides them with closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .numerics import Tolerance, exp_integral_e1, find_root, integrate

__all__ = [
    "FadingModel",
    "Rayleigh",
    "SnrRegion",
    "db_to_linear",
    "linear_to_db",
]

_QUAD_TOL = Tolerance(rel=1e-12, abs=1e-14)


def db_to_linear(db):
    if np.ndim(db):
        return 10.0 ** (np.asarray(db, dtype=float) / 10.0)
    return 10.0 ** (float(db) / 10.0)


def linear_to_db(g):
    if np.ndim(g):
        return 10.0 * np.log10(np.asarray(g, dtype=float))
    return 10.0 * math.log10(g)


@dataclass(frozen=True)
class SnrRegion:
    """Half-open pre-adaptation SNR interval ``[lo, hi)``; ``hi`` may be inf."""

    lo: float
    hi: float = math.inf

    def __post_init__(self) -> None:
        if not (0 <= self.lo < self.hi):
            raise ValueError(f"need 0 <= lo < hi, got ({self.lo}, {self.hi})")


def _check_nonneg(g) -> None:
    if np.any(np.asarray(g) < 0):
        raise ValueError("SNR must be >= 0")


@dataclass(frozen=True)
class FadingModel:
    """Generic SNR distribution with average SNR ``gbar`` (linear).

    Subclasses must provide :meth:`pdf` and :meth:`sf`; everything else has a
    numerical fallback.
    """

    gbar: float

    kind = "generic"

    def __post_init__(self) -> None:
        if not (self.gbar > 0 and math.isfinite(self.gbar)):
            raise ValueError(f"gbar must be positive and finite, got {self.gbar}")

    @property
    def gbar_db(self) -> float:
        return linear_to_db(self.gbar)

    # -- point functions -------------------------------------------------

    def pdf(self, g):
        raise NotImplementedError

    def sf(self, g):
        """Survival function ``1 - F(g)``."""
        raise NotImplementedError

    def cdf(self, g):
        _check_nonneg(g)
        return 1.0 - self.sf(g)

    def inv_sf(self, q: float) -> float:
        """SNR whose survival probability is ``q`` (``0 < q <= 1``)."""
        if not 0 < q <= 1:
            raise ValueError(f"survival probability must be in (0, 1], got {q}")
        if q == 1:
            return 0.0
        hi = self.gbar
        while self.sf(hi) > q:
            hi *= 2.0
        return find_root(lambda g: self.sf(g) - q, 0.0, hi, Tolerance(rel=1e-15, abs=0.0))

    def inv_cdf(self, p: float) -> float:
        if not 0 <= p < 1:
            raise ValueError(f"probability must be in [0, 1), got {p}")
        return self.inv_sf(1.0 - p)

    # -- region integrals -------------------------------------------------

    def masses(self, edges: np.ndarray) -> np.ndarray:
        """Probability of each interval between consecutive ``edges``."""
        s = self.sf(np.asarray(edges, dtype=float))
        return s[:-1] - s[1:]

    def inv_snr_masses(self, edges: np.ndarray) -> np.ndarray:
        """``int (1/g) f(g) dg`` over each interval between consecutive ``edges``."""
        edges = np.asarray(edges, dtype=float)
        if edges[0] <= 0:
            raise ValueError("1/SNR mass diverges for a region starting at 0")
        return np.array([
            integrate(lambda g: self.pdf(g) / g, lo, hi, _QUAD_TOL)
            for lo, hi in zip(edges[:-1], edges[1:])
        ])

    def prob_mass(self, region: SnrRegion) -> float:
        return float(self.masses(np.array([region.lo, region.hi]))[0])

    def inv_snr_mass(self, region: SnrRegion) -> float:
        return float(self.inv_snr_masses(np.array([region.lo, region.hi]))[0])

    def discrete_power_mass(self, sub_thresholds: Sequence[float]) -> float:
        """``sum_k P([g_k, g_{k+1})) / g_k`` over a region's sub-thresholds."""
        g = np.asarray(sub_thresholds, dtype=float)
        if g.size < 2:
            raise ValueError("need at least two sub-thresholds")
        if g[0] <= 0 or np.any(np.diff(g) <= 0):
            raise ValueError("sub-thresholds must be positive and strictly increasing")
        return float(np.sum(self.masses(g) / g[:-1]))

    # -- sampling ---------------------------------------------------------

    def sample(self, seed: int, n: int) -> np.ndarray:
        """``n`` i.i.d. SNR draws by inverse-cdf transform of seeded uniforms."""
        if n < 1:
            raise ValueError("n must be >= 1")
        u = np.random.default_rng(seed).random(n)
        return np.array([self.inv_cdf(p) for p in u])


@dataclass(frozen=True)
class Rayleigh(FadingModel):
    """Rayleigh fading: exponentially distributed SNR with mean ``gbar``."""

    kind = "rayleigh"

    def pdf(self, g):
        _check_nonneg(g)
        if np.ndim(g):
            return np.exp(-np.asarray(g, dtype=float) / self.gbar) / self.gbar
        return math.exp(-g / self.gbar) / self.gbar

    def sf(self, g):
        if np.ndim(g):
            return np.exp(-np.asarray(g, dtype=float) / self.gbar)
        return math.exp(-g / self.gbar)

    def cdf(self, g):
        # expm1 keeps full precision for small g
        _check_nonneg(g)
        if np.ndim(g):
            return -np.expm1(-np.asarray(g, dtype=float) / self.gbar)
        return -math.expm1(-g / self.gbar)

    def inv_sf(self, q: float) -> float:
        if not 0 < q <= 1:
            raise ValueError(f"survival probability must be in (0, 1], got {q}")
        return -self.gbar * math.log(q)

    def inv_cdf(self, p):
        p_arr = np.asarray(p, dtype=float)
        if np.any(p_arr < 0) or np.any(p_arr >= 1):
            raise ValueError(f"probability must be in [0, 1), got {p}")
        out = -self.gbar * np.log1p(-p_arr)
        return out if np.ndim(p) else float(out)

    def inv_snr_masses(self, edges: np.ndarray) -> np.ndarray:
        edges = np.asarray(edges, dtype=float)
        if edges[0] <= 0:
            raise ValueError("1/SNR mass diverges for a region starting at 0")
        e1 = np.array([exp_integral_e1(x) for x in edges / self.gbar])
        return (e1[:-1] - e1[1:]) / self.gbar

    def sample(self, seed: int, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        return self.inv_cdf(np.random.default_rng(seed).random(n))
