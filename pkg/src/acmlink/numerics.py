"""Special functions and generic numerical machinery.

Quadrature and bracketing are thin, failure-checked wrappers over QUADPACK
and Brent's method from scipy. The exponential integral and the multi-start
simplex driver are implemented here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize

EULER_GAMMA = 0.57721566490153286061

__all__ = [
    "Tolerance",
    "OptimizerReport",
    "NumericalError",
    "IntegrationError",
    "BracketError",
    "exp_integral_e1",
    "scaled_exp_integral_e1",
    "integrate",
    "find_root",
    "maximize",
]


class NumericalError(RuntimeError):
    """A numerical routine failed to produce a trustworthy value."""


class IntegrationError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


@dataclass(frozen=True)
class Tolerance:
    """Convergence tolerances shared by the numerical routines."""

    rel: float = 1e-9
    abs: float = 1e-12
    max_iter: int = 10_000

    def __post_init__(self) -> None:
        if not self.rel > 0:
            raise ValueError(f"rel must be > 0, got {self.rel}")
        if not self.abs >= 0:
            raise ValueError(f"abs must be >= 0, got {self.abs}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class OptimizerReport:
    """Outcome of :func:`maximize`.

    ``n_restarts`` counts the perturbed starts that were run on top of the
    supplied initial point(s).
    """

    best_value: float
    best_point: np.ndarray
    n_evals: int
    n_restarts: int
    converged: bool

    def as_dict(self) -> dict:
        return {
            "best_value": float(self.best_value),
            "best_point": [float(v) for v in np.atleast_1d(self.best_point)],
            "n_evals": int(self.n_evals),
            "n_restarts": int(self.n_restarts),
            "converged": bool(self.converged),
        }


# ---------------------------------------------------------------------------
# Exponential integral
# ---------------------------------------------------------------------------

_FPMIN = 1e-300
_EPS = 1e-16


def _e1_series(x: float) -> float:
    # E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)
    total = 0.0
    term = 1.0
    for k in range(1, 200):
        term *= -x / k
        contrib = term / k
        total += contrib
        if abs(contrib) < _EPS * abs(total):
            break
    return -EULER_GAMMA - math.log(x) - total


def _e1_scaled_cf(x: float) -> float:
    # e^x E1(x) by modified Lentz on the even form of the continued fraction.
    b = x + 1.0
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -float(i * i)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise NumericalError(f"E1 continued fraction did not converge at x={x}")


def exp_integral_e1(x: float) -> float:
    """Exponential integral ``E1(x) = int_x^inf exp(-t)/t dt``.

    Power series for ``x <= 1``, continued fraction above. ``E1(inf)`` is 0.

    Raises
    ------
    ValueError
        If ``x <= 0``, where the integral diverges.
    """
    x = float(x)
    if not x > 0:
        raise ValueError(f"E1 is only defined for x > 0, got {x}")
    if math.isinf(x):
        return 0.0
    if x <= 1.0:
        return _e1_series(x)
    if x > 745.0:
        return 0.0
    return _e1_scaled_cf(x) * math.exp(-x)


def scaled_exp_integral_e1(x: float) -> float:
    """``exp(x) * E1(x)``, finite for large ``x`` where the factors are not."""
    x = float(x)
    if not x > 0:
        raise ValueError(f"E1 is only defined for x > 0, got {x}")
    if math.isinf(x):
        return 0.0
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)
    return _e1_scaled_cf(x)


# ---------------------------------------------------------------------------
# Quadrature and root finding
# ---------------------------------------------------------------------------


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Adaptive quadrature of ``f`` over ``(a, b)``; ``b`` may be ``+inf``.

    Raises :class:`IntegrationError` instead of returning a value QUADPACK
    flagged as unreliable.
    """
    if a == b:
        return 0.0
    if not a < b:
        raise ValueError(f"need a < b, got a={a}, b={b}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = _integrate.quad(
            f,
            a,
            b,
            epsabs=tol.abs,
            epsrel=tol.rel,
            limit=min(tol.max_iter, 2000),
            full_output=1,
        )
    value = out[0]
    if len(out) > 3:
        raise IntegrationError(f"quadrature over ({a}, {b}) failed: {out[3]}")
    if not math.isfinite(value):
        raise IntegrationError(f"quadrature over ({a}, {b}) returned {value}")
    return float(value)


def find_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """Brent root of ``f`` inside the sign-changing bracket ``[lo, hi]``."""
    flo = f(lo)
    if flo == 0.0:
        return float(lo)
    fhi = f(hi)
    if fhi == 0.0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo}, f(hi)={fhi}"
        )
    rtol = max(tol.rel, 4 * np.finfo(float).eps)
    root, res = _optimize.brentq(
        f, lo, hi, xtol=max(tol.abs, 1e-300), rtol=rtol, maxiter=tol.max_iter,
        full_output=True, disp=False,
    )
    if not res.converged:
        raise NumericalError(f"brentq did not converge: {res.flag}")
    return float(root)


# ---------------------------------------------------------------------------
# Derivative-free maximization
# ---------------------------------------------------------------------------


def _simplex(x0: np.ndarray, bounds: np.ndarray, step: float) -> np.ndarray:
    n = x0.size
    sim = np.tile(x0, (n + 1, 1))
    for i in range(n):
        h = step * max(1.0, abs(x0[i]))
        lo, hi = bounds[i]
        if x0[i] + h <= hi:
            sim[i + 1, i] = x0[i] + h
        elif x0[i] - h >= lo:
            sim[i + 1, i] = x0[i] - h
        else:
            sim[i + 1, i] = 0.5 * (lo + hi)
    return sim


def maximize(
    f: Callable[[np.ndarray], float],
    init: Sequence[float] | np.ndarray,
    bounds: Sequence[tuple[float, float]] | None = None,
    tol: Tolerance = DEFAULT_TOL,
    restarts: int = 8,
    *,
    seed: int = 0,
    extra_starts: Sequence[Sequence[float]] = (),
    step: float = 0.25,
    spread: float = 0.5,
    polish_rounds: int = 6,
) -> OptimizerReport:
    """Multi-start Nelder-Mead maximization under box bounds.

    Every start gets one simplex run; the best point found is then re-started
    from itself until the value stops improving by more than ``tol.abs``.
    Points outside ``bounds`` score ``-inf``. The result is never worse than
    ``f(init)``.

    Restarts perturb ``init`` with Gaussian noise of scale ``spread`` (or a
    quarter of the box width where the box is finite), clipped to the box,
    drawn from ``numpy.random.default_rng(seed)``.
    """
    x0 = np.atleast_1d(np.asarray(init, dtype=float))
    n = x0.size
    if bounds is None:
        box = np.tile([-np.inf, np.inf], (n, 1))
    else:
        box = np.asarray(bounds, dtype=float).reshape(n, 2)
    if np.any(box[:, 0] > box[:, 1]):
        raise ValueError("empty bounds")
    f0 = f(x0)
    if not np.isfinite(f0):
        raise ValueError(f"objective is not finite at init: {f0}")

    n_evals = 1
    lower, upper = box[:, 0], box[:, 1]
    bounded = bool(np.isfinite(box).any())

    def neg(x: np.ndarray) -> float:
        nonlocal n_evals
        n_evals += 1
        if bounded and ((x < lower).any() or (x > upper).any()):
            return np.inf
        v = f(x)
        return -v if v > -np.inf else np.inf

    rng = np.random.default_rng(seed)
    width = upper - lower
    scale = np.where(np.isfinite(width), 0.25 * width, spread)
    starts = [x0] + [np.asarray(s, dtype=float).reshape(n) for s in extra_starts]
    for _ in range(restarts):
        starts.append(np.clip(x0 + scale * rng.standard_normal(n), lower, upper))

    opts = {
        "xatol": tol.rel,
        "fatol": tol.abs,
        "maxiter": tol.max_iter * max(n, 1),
        "maxfev": tol.max_iter * max(n, 1),
        "adaptive": n > 2,
    }

    def simplex_run(x: np.ndarray):
        with np.errstate(invalid="ignore", over="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return _optimize.minimize(
                neg, x, method="Nelder-Mead",
                options={**opts, "initial_simplex": _simplex(x, box, step)},
            )

    # One pass from every start, then re-start the winner from its own
    # optimum until the value stops improving; re-expanding the simplex
    # unsticks a collapsed one.
    best_x, best_fx, converged = x0.copy(), -float(f0), False
    for start in starts:
        res = simplex_run(start)
        if res.fun < best_fx:
            best_x, best_fx, converged = np.array(res.x, dtype=float), float(res.fun), bool(res.success)
    for _ in range(polish_rounds):
        res = simplex_run(best_x)
        gain = best_fx - res.fun
        if res.fun <= best_fx:
            best_x, best_fx, converged = np.array(res.x, dtype=float), float(res.fun), bool(res.success)
        if not gain > tol.abs:
            break
    best_v = -best_fx

    return OptimizerReport(
        best_value=best_v,
        best_point=best_x,
        n_evals=n_evals,
        n_restarts=restarts,
        converged=converged and bool(np.isfinite(best_v)),
    )
