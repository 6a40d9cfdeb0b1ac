"""Switching-threshold and power-target solvers.

For a fixed set of thresholds the power-adapted problems are concave in the
SNR targets and solved in closed form by waterfilling, so the optimizers only
ever search over thresholds. The constant-power problem is reduced to the
first two thresholds by the stationarity recursion for the rest.

Thresholds are searched in an unconstrained parametrization,
``g_1 = exp(x_1)`` and ``g_j = g_{j-1} * (1 + exp(x_j))``, which keeps them
ordered without constraint handling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .fading import FadingModel, db_to_linear, linear_to_db
from .numerics import NumericalError, OptimizerReport, Tolerance, maximize
from .policy import AdaptationPolicy, PolicyMetrics, PowerKind, avg_power, metrics, quantize

__all__ = [
    "DesignSpec",
    "DesignResult",
    "InfeasibleCandidate",
    "RecursionOverflow",
    "waterfill_kappa",
    "continuous_objective",
    "discrete_objective",
    "constant_objective",
    "next_threshold_constant",
    "constant_thresholds",
    "design",
    "rounded_result",
    "design_continuous",
    "design_discrete",
    "design_constant",
    "design_with_outage_cap",
]

DESIGN_TOL = Tolerance(rel=1e-10, abs=1e-14, max_iter=3000)


class InfeasibleCandidate(ValueError):
    """Waterfilling produced a non-positive SNR target."""

    def __init__(self, kappa: np.ndarray, lam: float) -> None:
        super().__init__(f"infeasible SNR targets: {kappa}")
        self.kappa = kappa
        self.lam = lam


class RecursionOverflow(ValueError):
    """The constant-power recursion ran past the top of the distribution."""


@dataclass(frozen=True)
class DesignSpec:
    """What to design: scheme, code count N, power levels K, optional outage cap.

    ``n_power_levels`` defaults to 1 for constant power and ``math.inf`` for
    continuous power; it must be given for discrete power.
    """

    scheme: PowerKind
    n_codes: int
    n_power_levels: float | None = None
    outage_cap: float | None = None
    tol: Tolerance = DESIGN_TOL
    restarts: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        scheme = PowerKind(self.scheme)
        object.__setattr__(self, "scheme", scheme)
        k = self.n_power_levels
        if k is None:
            if scheme is PowerKind.DISCRETE:
                raise ValueError("discrete power needs n_power_levels")
            k = 1 if scheme is PowerKind.CONSTANT else math.inf
        if int(self.n_codes) != self.n_codes or self.n_codes < 1:
            raise ValueError(f"n_codes must be an integer >= 1, got {self.n_codes}")
        if scheme is PowerKind.CONSTANT and k != 1:
            raise ValueError(f"constant power has K = 1, got {k}")
        if scheme is PowerKind.CONTINUOUS and k != math.inf:
            raise ValueError(f"continuous power has K = inf, got {k}")
        if scheme is PowerKind.DISCRETE and (k == math.inf or int(k) != k or k < 1):
            raise ValueError(f"discrete power needs a finite integer K >= 1, got {k}")
        if self.outage_cap is not None and not 0 < self.outage_cap < 1:
            raise ValueError(f"outage_cap must lie in (0, 1), got {self.outage_cap}")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")
        object.__setattr__(self, "n_codes", int(self.n_codes))
        object.__setattr__(self, "n_power_levels", k if k == math.inf else int(k))


@dataclass(frozen=True)
class DesignResult:
    policy: AdaptationPolicy
    metrics: PolicyMetrics
    lam: float | None
    report: OptimizerReport

    @property
    def masa(self) -> float:
        return self.metrics.ase

    @property
    def converged(self) -> bool:
        return self.report.converged


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


def waterfill_kappa(w, coef) -> tuple[np.ndarray, float]:
    """Optimal SNR targets ``kappa_n = w_n / (lam coef_n) - 1`` under ``sum kappa_n coef_n = 1``.

    Raises
    ------
    InfeasibleCandidate
        If any target comes out non-positive or non-finite.
    """
    w = np.asarray(w, dtype=float)
    coef = np.asarray(coef, dtype=float)
    if (w <= 0).any() or (coef <= 0).any():
        raise ValueError("waterfilling needs positive masses")
    lam = w.sum() / (1.0 + coef.sum())
    with np.errstate(divide="ignore", over="ignore"):
        kappa = w / (lam * coef) - 1.0
    # an underflowed denominator gives inf, which is no more usable than <= 0
    if (kappa <= 0).any() or not np.isfinite(kappa).all():
        raise InfeasibleCandidate(kappa, lam)
    return kappa, float(lam)


def _ordered(g: np.ndarray) -> bool:
    return bool(g[0] > 0 and g[-1] < np.inf and (g[1:] > g[:-1]).all())


def continuous_objective(thresholds, model: FadingModel) -> float:
    """MASA of continuous power at the given rate thresholds, ``-inf`` if infeasible."""
    g = np.asarray(thresholds, dtype=float).ravel()
    if not _ordered(g):
        return -np.inf
    edges = np.append(g, np.inf)
    w = model.masses(edges)
    try:
        kappa, _ = waterfill_kappa(w, model.inv_snr_masses(edges))
    except ValueError:
        return -np.inf
    return float(np.dot(np.log2(1.0 + kappa), w))


def _discrete_masses(g: np.ndarray, model: FadingModel) -> tuple[np.ndarray, np.ndarray]:
    p = model.masses(np.append(g.ravel(), np.inf)).reshape(g.shape)
    return p.sum(axis=1), (p / g).sum(axis=1)


def discrete_objective(thresholds, model: FadingModel) -> float:
    """MASA of discrete power at an N x K threshold matrix, ``-inf`` if infeasible."""
    g = np.asarray(thresholds, dtype=float)
    if g.ndim == 1:
        g = g.reshape(-1, 1)
    if not _ordered(g.ravel()):
        return -np.inf
    w, d = _discrete_masses(g, model)
    try:
        kappa, _ = waterfill_kappa(w, d)
    except ValueError:
        return -np.inf
    return float(np.dot(np.log2(1.0 + kappa), w))


def constant_objective(thresholds, model: FadingModel) -> float:
    """MASA of constant power (on/off) at the given rate thresholds."""
    g = np.asarray(thresholds, dtype=float).ravel()
    if not (np.all(np.isfinite(g)) and g[0] >= 0 and np.all(np.diff(g) > 0)):
        return -np.inf
    q = model.sf(g[0])
    if not q > 0:
        return -np.inf
    w = model.masses(np.append(g, np.inf))
    return float(np.dot(np.log2(1.0 + g / q), w))


def next_threshold_constant(g_prev: float, g_cur: float, g_first: float, model: FadingModel) -> float:
    """Next constant-power threshold from the stationarity condition at ``g_cur``.

    Solves ``F(g_next) = F(g_cur) + (a + g_cur) ln((a + g_cur)/(a + g_prev)) f(g_cur)``
    with ``a = 1 - F(g_first)``. Worked on the survival side for accuracy in
    the tail.
    """
    if not 0 <= g_prev <= g_cur:
        raise ValueError(f"need 0 <= g_prev <= g_cur, got {g_prev}, {g_cur}")
    a = model.sf(g_first)
    step = (a + g_cur) * math.log((a + g_cur) / (a + g_prev)) * model.pdf(g_cur)
    q = model.sf(g_cur) - step
    if not q > 0:
        raise RecursionOverflow(f"cdf argument reached 1 after g={g_cur}")
    return model.inv_sf(q)


def constant_thresholds(g1: float, g2: float, n_codes: int, model: FadingModel) -> np.ndarray:
    """Thresholds ``g_1..g_N`` generated from the first two by the recursion."""
    g = [g1, g2][:n_codes]
    while len(g) < n_codes:
        g.append(next_threshold_constant(g[-2], g[-1], g1, model))
    return np.array(g)


# ---------------------------------------------------------------------------
# Parametrization and seeding
# ---------------------------------------------------------------------------


def _chain(x: np.ndarray, first: float | None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        if first is None:
            g0, rest = math.exp(min(x[0], 700.0)), x[1:]
        else:
            g0, rest = first, x
        return g0 * np.concatenate(([1.0], np.cumprod(1.0 + np.exp(rest))))


def _unchain(g: np.ndarray, fixed_first: bool) -> np.ndarray:
    g = np.asarray(g, dtype=float).ravel()
    ratios = np.log(np.maximum(g[1:] / g[:-1] - 1.0, 1e-300))
    return ratios if fixed_first else np.concatenate(([math.log(g[0])], ratios))


def _equiprobable(model: FadingModel, m: int, first: float | None) -> np.ndarray:
    """``m`` thresholds cutting the axis above ``first`` into equal-probability regions."""
    if first is None:
        return np.array([model.inv_sf((m + 1 - i) / (m + 1)) for i in range(1, m + 1)])
    q = model.sf(first)
    return np.array([first] + [model.inv_sf(q * (m + 1 - i) / m) for i in range(2, m + 1)])


def _split_regions(model: FadingModel, rate_thresholds: np.ndarray, k: int) -> np.ndarray:
    """Sub-thresholds splitting every rate region into ``k`` equal-probability steps."""
    q = np.append(model.sf(np.asarray(rate_thresholds, dtype=float)), 0.0)
    rows = [
        [model.inv_sf(q[n] - j / k * (q[n] - q[n + 1])) for j in range(k)]
        for n in range(len(rate_thresholds))
    ]
    return np.array(rows)


def _first_threshold(spec: DesignSpec, model: FadingModel) -> float | None:
    if spec.outage_cap is None:
        return None
    g = float(model.inv_cdf(spec.outage_cap))
    # the inverse may land an ulp high; the cap must hold exactly
    while g > 0 and model.cdf(g) > spec.outage_cap:
        g = float(np.nextafter(g, 0.0))
    return g


_MAX_SEEDS = 6


def _ladder(model: FadingModel, m: int, first: float) -> list[np.ndarray]:
    """Thresholds above a pinned ``first`` with survival shrinking geometrically.

    A low pinned first threshold can leave every balanced partition
    infeasible (the lowest region's target goes non-positive); pushing the
    upper regions into the tail restores feasibility.
    """
    q = model.sf(first)
    return [
        np.array([first] + [model.inv_sf(q * t**j) for j in range(1, m)])
        for t in (0.3, 0.1, 1e-2, 1e-3)
    ]


def _run(
    objective, seeds: list[np.ndarray], spec: DesignSpec, fallback: list[np.ndarray] = ()
) -> OptimizerReport:
    scored = [(objective(s), s) for s in seeds]
    scored = [(v, s) for v, s in scored if np.isfinite(v)]
    if not scored:
        scored = [(objective(s), s) for s in fallback]
        scored = [(v, s) for v, s in scored if np.isfinite(v)]
    if not scored:
        raise NumericalError("no feasible starting point found")
    scored.sort(key=lambda t: -t[0])
    init = scored[0][1]
    if init.size == 0:
        return OptimizerReport(scored[0][0], init, len(seeds), 0, True)
    return maximize(
        objective,
        init,
        tol=spec.tol,
        restarts=spec.restarts,
        seed=spec.seed,
        extra_starts=[s for _, s in scored[1:_MAX_SEEDS]],
    )


def _seed_spec(spec: DesignSpec, scheme: PowerKind, k=None) -> DesignSpec:
    return replace(spec, scheme=scheme, n_power_levels=k, restarts=min(spec.restarts, 2))


# ---------------------------------------------------------------------------
# Designers
# ---------------------------------------------------------------------------


def design_constant(spec: DesignSpec, model: FadingModel) -> DesignResult:
    """Optimal constant-power (on/off) thresholds for N codes."""
    if spec.scheme is not PowerKind.CONSTANT:
        raise ValueError("design_constant needs a constant-power spec")
    n = spec.n_codes
    first = _first_threshold(spec, model)
    n_free = min(n, 2) - (first is not None)

    def thresholds(x):
        g = _chain(x[:n_free], first)
        if n <= 2:
            return g
        return constant_thresholds(g[0], g[1], n, model)

    def objective(x):
        try:
            g = thresholds(x)
        except (RecursionOverflow, ValueError, OverflowError):
            return -np.inf
        return constant_objective(g, model)

    seeds = []
    for m in sorted({n, 2 * n, n + 1, max(n // 2, 1)}):
        g = _equiprobable(model, m, first)
        if g.size >= min(n, 2):
            seeds.append(_unchain(g[: min(n, 2)], first is not None))
    # a low pinned first threshold makes most second thresholds overflow the
    # recursion; scan the single free coordinate for ones that do not
    fallback = [np.array([x]) for x in np.linspace(-25.0, 10.0, 141)] if n_free == 1 else []
    report = _run(objective, seeds, spec, fallback)
    g = thresholds(report.best_point)
    policy = AdaptationPolicy(PowerKind.CONSTANT, g.reshape(-1, 1))
    return DesignResult(policy, metrics(policy, model), None, report)


def design_continuous(spec: DesignSpec, model: FadingModel) -> DesignResult:
    """Optimal rate thresholds and SNR targets with continuous power (piecewise inversion)."""
    if spec.scheme is not PowerKind.CONTINUOUS:
        raise ValueError("design_continuous needs a continuous-power spec")
    n = spec.n_codes
    first = _first_threshold(spec, model)
    fixed = first is not None

    def objective(x):
        return continuous_objective(_chain(x, first), model)

    seeds = [_unchain(_equiprobable(model, n, first), fixed)]
    const = design_constant(_seed_spec(spec, PowerKind.CONSTANT), model)
    seeds.append(_unchain(const.policy.thresholds[:, 0], fixed))
    fallback = [_unchain(g, fixed) for g in _ladder(model, n, first)] if fixed else []
    report = _run(objective, seeds, spec, fallback)
    g = _chain(report.best_point, first)
    edges = np.append(g, np.inf)
    kappa, lam = waterfill_kappa(model.masses(edges), model.inv_snr_masses(edges))
    policy = AdaptationPolicy(PowerKind.CONTINUOUS, g.reshape(-1, 1), kappa)
    return DesignResult(policy, metrics(policy, model), lam, report)


def design_discrete(spec: DesignSpec, model: FadingModel) -> DesignResult:
    """Optimal N x K thresholds and SNR targets with stepwise (discrete) power."""
    if spec.scheme is not PowerKind.DISCRETE:
        raise ValueError("design_discrete needs a discrete-power spec")
    n, k = spec.n_codes, int(spec.n_power_levels)
    first = _first_threshold(spec, model)
    fixed = first is not None

    def objective(x):
        return discrete_objective(_chain(x, first).reshape(n, k), model)

    seeds = [_unchain(_equiprobable(model, n * k, first), fixed)]
    const = design_constant(_seed_spec(spec, PowerKind.CONSTANT, 1), model)
    cont = design_continuous(_seed_spec(spec, PowerKind.CONTINUOUS, math.inf), model)
    for rates in (const.policy.thresholds[:, 0], cont.policy.thresholds[:, 0]):
        seeds.append(_unchain(_split_regions(model, rates, k), fixed))
    fallback = [_unchain(g, fixed) for g in _ladder(model, n * k, first)] if fixed else []
    report = _run(objective, seeds, spec, fallback)
    g = _chain(report.best_point, first).reshape(n, k)
    w, d = _discrete_masses(g, model)
    kappa, lam = waterfill_kappa(w, d)
    policy = AdaptationPolicy(PowerKind.DISCRETE, g, kappa)
    return DesignResult(policy, metrics(policy, model), lam, report)


_DESIGNERS = {
    PowerKind.CONSTANT: design_constant,
    PowerKind.CONTINUOUS: design_continuous,
    PowerKind.DISCRETE: design_discrete,
}


def design_with_outage_cap(spec: DesignSpec, model: FadingModel) -> DesignResult:
    """Best design whose no-transmission probability stays within ``spec.outage_cap``.

    The first threshold is pinned at the highest value meeting the cap and the
    remaining thresholds are optimized around it.
    """
    if spec.outage_cap is None:
        raise ValueError("design_with_outage_cap needs spec.outage_cap")
    return _DESIGNERS[spec.scheme](spec, model)


def rounded_result(
    result: DesignResult, model: FadingModel, outage_cap: float | None = None
) -> DesignResult:
    """``result`` with thresholds rounded to their serialized precision.

    The SNR targets are rescaled so the power constraint stays exact, and the
    first threshold is rounded down when rounding to nearest would break
    ``outage_cap``.
    """
    policy = quantize(result.policy, model)
    if outage_cap is not None and model.cdf(policy.first_threshold) > outage_cap:
        g = policy.thresholds.copy()
        exact = linear_to_db(result.policy.first_threshold)
        g.flat[0] = db_to_linear(math.floor(exact * 1e6) / 1e6)
        policy = quantize(AdaptationPolicy(policy.kind, g, policy.kappa), model)
    if policy.kind is not PowerKind.CONSTANT:
        kappa = policy.kappa / avg_power(policy, model)
        policy = AdaptationPolicy(policy.kind, policy.thresholds, kappa)
    return DesignResult(policy, metrics(policy, model), result.lam, result.report)


def design(spec: DesignSpec, model: FadingModel) -> DesignResult:
    """Dispatch on ``spec.scheme`` (and the outage cap, when set)."""
    return _DESIGNERS[spec.scheme](spec, model)
