"""Shannon-capacity baselines and the two-region outage-tolerant comparator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fading import FadingModel, Rayleigh
from .numerics import (
    NumericalError,
    OptimizerReport,
    Tolerance,
    exp_integral_e1,
    find_root,
    integrate,
    maximize,
    scaled_exp_integral_e1,
)

__all__ = [
    "CapacityPoint",
    "ArtResult",
    "capacity_ora",
    "gamma_cut",
    "gamma_cut_residual",
    "capacity_opra",
    "art_two_region",
    "art_objective",
]

LOG2E = 1.0 / math.log(2.0)
_QUAD = Tolerance(rel=1e-12, abs=1e-14)


@dataclass(frozen=True)
class CapacityPoint:
    gbar: float
    c_ora: float
    c_opra: float
    gamma_cut: float


def _closed_form(model: FadingModel, method: str) -> bool:
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed" and not isinstance(model, Rayleigh):
        raise ValueError("closed forms exist only for Rayleigh fading")
    return method == "closed" or (method == "auto" and isinstance(model, Rayleigh))


def capacity_ora(model: FadingModel, method: str = "auto") -> float:
    """Capacity with continuous rate adaptation at constant transmit power."""
    if _closed_form(model, method):
        return LOG2E * scaled_exp_integral_e1(1.0 / model.gbar)
    return integrate(lambda g: math.log2(1.0 + g) * model.pdf(g), 0.0, math.inf, _QUAD)


def gamma_cut_residual(gc: float, model: FadingModel, method: str = "auto") -> float:
    """``int_gc^inf (1/gc - 1/g) f(g) dg - 1``; zero at the waterfilling cutoff."""
    if _closed_form(model, method):
        x = gc / model.gbar
        return model.sf(gc) / gc - exp_integral_e1(x) / model.gbar - 1.0
    return integrate(lambda g: (1.0 / gc - 1.0 / g) * model.pdf(g), gc, math.inf, _QUAD) - 1.0


def gamma_cut(model: FadingModel, method: str = "auto") -> float:
    """Cutoff SNR of the waterfilling power law.

    The power-constraint residual falls monotonically from ``+inf`` at 0 to
    ``-1`` at infinity, so the bracket is widened until it changes sign.
    """
    r = lambda gc: gamma_cut_residual(gc, model, method)  # noqa: E731
    hi = model.gbar
    while r(hi) > 0:
        hi *= 2.0
    lo = min(hi, model.gbar) / 2.0
    while r(lo) < 0:
        lo /= 2.0
        if lo < 1e-300:
            raise NumericalError("cannot bracket the cutoff SNR")
    return find_root(r, lo, hi, Tolerance(rel=1e-15, abs=0.0, max_iter=500))


def capacity_opra(model: FadingModel, method: str = "auto") -> CapacityPoint:
    """Capacity with continuous rate and power adaptation (waterfilling).

    Evaluated as ``int_gc^inf log2(g/gc) f(g) dg``; for Rayleigh this is
    ``log2(e) E1(gc/gbar)``.
    """
    gc = gamma_cut(model, method)
    if _closed_form(model, method):
        c = LOG2E * exp_integral_e1(gc / model.gbar)
    else:
        c = integrate(lambda g: math.log2(g / gc) * model.pdf(g), gc, math.inf, _QUAD)
    return CapacityPoint(model.gbar, capacity_ora(model, method), c, gc)


# ---------------------------------------------------------------------------
# Outage-tolerant two-region comparator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArtResult:
    """Average reliable throughput of the best two-region scheme.

    Region 1 is ``[0, boundary)``, region 2 ``[boundary, inf)``. Region ``n``
    sends ``log2(1 + power_n * rate_point_n)`` at one power level and loses
    the block whenever ``g < rate_point_n``.
    """

    art: float
    p_outage: float
    boundary: float
    rate_points: tuple[float, float]
    powers: tuple[float, float]
    report: OptimizerReport


def _art_parts(params, model: FadingModel):
    s, a1, a2, p1 = params
    if not (0.0 <= a1 <= s <= a2 and p1 >= 0.0 and math.isfinite(a2)):
        return None
    q = model.sf(s)
    if not 0.0 < q < 1.0 or p1 * (1.0 - q) > 1.0:
        return None
    p2 = (1.0 - p1 * (1.0 - q)) / q
    art = (
        math.log2(1.0 + p1 * a1) * (model.sf(a1) - q)
        + math.log2(1.0 + p2 * a2) * model.sf(a2)
    )
    p_out = model.cdf(a1) + (q - model.sf(a2))
    return art, p_out, p2


def art_objective(params, model: FadingModel) -> float:
    """Average reliable throughput at ``(boundary, rate_point_1, rate_point_2, power_1)``.

    ``power_2`` follows from the average power constraint; ``-inf`` outside
    the feasible set.
    """
    parts = _art_parts(params, model)
    return -math.inf if parts is None else parts[0]


def art_two_region(
    model: FadingModel,
    zero_outage: bool = False,
    restarts: int = 8,
    seed: int = 0,
) -> ArtResult:
    """Maximize average reliable throughput over two regions, outage allowed.

    With ``zero_outage`` each rate point is pinned to its region's lower edge,
    which rules out information outage.
    """
    gb = model.gbar

    if zero_outage:
        def to_params(x):
            s = math.exp(min(x[0], 700.0))
            return (s, 0.0, s, 0.0)
        starts = [np.array([math.log(gb * f)]) for f in (0.3, 1.0, 2.0)]
    else:
        def to_params(x):
            # boundary, fraction of it for rate point 1, excess for rate point 2,
            # share of the power budget for region 1
            s = math.exp(min(x[0], 700.0))
            frac = 1.0 / (1.0 + math.exp(-x[1]))
            a2 = s * (1.0 + math.exp(min(x[2], 700.0)))
            share = 1.0 / (1.0 + math.exp(-x[3]))
            return (s, frac * s, a2, share / (1.0 - model.sf(s)))
        starts = [
            np.array([math.log(gb * f), 0.0, -3.0, -1.0])
            for f in (0.3, 1.0, 2.0)
        ]

    objective = lambda x: art_objective(to_params(x), model)  # noqa: E731
    starts.sort(key=lambda x: -objective(x))
    report = maximize(
        objective, starts[0], tol=Tolerance(rel=1e-11, abs=1e-15, max_iter=5000),
        restarts=restarts, seed=seed, extra_starts=starts[1:], spread=1.5,
    )
    s, a1, a2, p1 = to_params(report.best_point)
    art, p_out, p2 = _art_parts((s, a1, a2, p1), model)
    return ArtResult(art, p_out, s, (a1, a2), (p1, p2), report)
