"""Adaptation policies and their analytic evaluation.

A policy partitions the pre-adaptation SNR axis with an N x K threshold
matrix. Row ``n`` belongs to code ``n``; column ``k`` to the power step
within that code's region. Below the first threshold nothing is sent.

Power laws (as a fraction of the average power):

* constant:   ``1 / (1 - F(g_11))`` everywhere above ``g_11``
* discrete:   ``kappa_n / g_nk`` on ``[g_nk, g_n,k+1)``
* continuous: ``kappa_n / g`` on ``[g_n1, g_n+1,1)``
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .fading import FadingModel, Rayleigh, db_to_linear, linear_to_db

__all__ = [
    "PowerKind",
    "AdaptationPolicy",
    "PolicyMetrics",
    "PolicyFormatError",
    "power_at",
    "rate_at",
    "post_snr",
    "avg_power",
    "spectral_efficiencies",
    "metrics",
    "policy_to_dict",
    "policy_from_dict",
    "load_policy",
    "quantize",
]


class PowerKind(str, Enum):
    CONSTANT = "constant"
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class AdaptationPolicy:
    """Switching thresholds (linear SNR, shape N x K) and SNR targets.

    Thresholds must be non-decreasing in row-major order; equal neighbours
    describe an empty region, which evaluates as a no-op. ``kappa`` is
    required for discrete and continuous power and must be absent for
    constant power.
    """

    kind: PowerKind
    thresholds: np.ndarray
    kappa: np.ndarray | None = None

    def __post_init__(self) -> None:
        kind = PowerKind(self.kind)
        object.__setattr__(self, "kind", kind)
        g = np.array(self.thresholds, dtype=float)
        if g.ndim == 1:
            g = g.reshape(-1, 1)
        if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
            raise ValueError(f"thresholds must be a non-empty N x K matrix, got shape {g.shape}")
        if kind is not PowerKind.DISCRETE and g.shape[1] != 1:
            raise ValueError(f"{kind.value} policies have K = 1, got K = {g.shape[1]}")
        flat = g.ravel()
        if not np.all(np.isfinite(flat)):
            raise ValueError("thresholds must be finite")
        if np.any(np.diff(flat) < 0):
            raise ValueError("thresholds must be non-decreasing in row-major order")
        if kind is PowerKind.CONSTANT:
            if flat[0] < 0:
                raise ValueError("first threshold must be >= 0")
            if self.kappa is not None:
                raise ValueError("constant-power policies carry no kappa")
            object.__setattr__(self, "thresholds", _frozen(g))
            return
        if flat[0] <= 0:
            raise ValueError("power-adapted policies need a first threshold > 0")
        if self.kappa is None:
            raise ValueError(f"{kind.value} policies need kappa")
        kappa = np.array(self.kappa, dtype=float).ravel()
        if kappa.shape != (g.shape[0],):
            raise ValueError(f"kappa must have length N = {g.shape[0]}, got {kappa.size}")
        if not np.all(kappa > 0) or not np.all(np.isfinite(kappa)):
            raise ValueError("kappa values must be positive and finite")
        object.__setattr__(self, "thresholds", _frozen(g))
        object.__setattr__(self, "kappa", _frozen(kappa))

    @property
    def n_codes(self) -> int:
        return self.thresholds.shape[0]

    @property
    def n_power_levels(self) -> int:
        return self.thresholds.shape[1]

    @property
    def first_threshold(self) -> float:
        return float(self.thresholds[0, 0])

    def region_edges(self) -> np.ndarray:
        """Rate-region boundaries ``g_11, ..., g_N1, inf``."""
        return np.append(self.thresholds[:, 0], np.inf)


@dataclass(frozen=True)
class PolicyMetrics:
    ase: float
    se_per_region: np.ndarray
    avg_power: float
    p_no_tx: float


def spectral_efficiencies(policy: AdaptationPolicy, model: FadingModel) -> np.ndarray:
    """Per-code spectral efficiency in bits/s/Hz."""
    if policy.kind is PowerKind.CONSTANT:
        # a policy that never transmits gets an unbounded boost; its ASE is still 0
        with np.errstate(divide="ignore"):
            return np.log2(1.0 + policy.thresholds[:, 0] / model.sf(policy.first_threshold))
    return np.log2(1.0 + policy.kappa)


def _locate(policy: AdaptationPolicy, g: np.ndarray) -> np.ndarray:
    # Index into the flattened threshold list, -1 below the first threshold.
    return np.searchsorted(policy.thresholds.ravel(), g, side="right") - 1


def _evaluate(policy, model, g, what):
    scalar = np.ndim(g) == 0
    g = np.atleast_1d(np.asarray(g, dtype=float))
    if np.any(g < 0):
        raise ValueError("SNR must be >= 0")
    idx = _locate(policy, g)
    tx = idx >= 0
    out = np.zeros_like(g)
    n = idx[tx] // policy.n_power_levels
    if what == "rate":
        out[tx] = spectral_efficiencies(policy, model)[n]
    elif policy.kind is PowerKind.CONSTANT:
        if np.any(tx):
            out[tx] = 1.0 / model.sf(policy.first_threshold)
    elif policy.kind is PowerKind.DISCRETE:
        out[tx] = policy.kappa[n] / policy.thresholds.ravel()[idx[tx]]
    else:
        out[tx] = policy.kappa[n] / g[tx]
    return float(out[0]) if scalar else out


def power_at(policy: AdaptationPolicy, model: FadingModel, g):
    """Transmit power ``S(g)/S_avg`` at pre-adaptation SNR ``g``."""
    return _evaluate(policy, model, g, "power")


def rate_at(policy: AdaptationPolicy, model: FadingModel, g):
    """Spectral efficiency of the code selected at SNR ``g`` (0 when buffering)."""
    return _evaluate(policy, model, g, "rate")


def post_snr(policy: AdaptationPolicy, model: FadingModel, g):
    """Received SNR after power adaptation, ``g * S(g)/S_avg``."""
    if np.ndim(g):
        return np.asarray(g, dtype=float) * power_at(policy, model, g)
    return float(g) * power_at(policy, model, g)


def avg_power(policy: AdaptationPolicy, model: FadingModel) -> float:
    """Average transmit power as a fraction of the budget."""
    if policy.kind is PowerKind.CONSTANT:
        # the power level is normalized by exactly the transmit probability
        return 1.0 if model.sf(policy.first_threshold) > 0 else 0.0
    if policy.kind is PowerKind.CONTINUOUS:
        coef = model.inv_snr_masses(policy.region_edges())
        return float(np.dot(policy.kappa, coef))
    flat = np.append(policy.thresholds.ravel(), np.inf)
    sub = (model.masses(flat) / flat[:-1]).reshape(policy.thresholds.shape)
    return float(np.dot(policy.kappa, sub.sum(axis=1)))


def metrics(policy: AdaptationPolicy, model: FadingModel) -> PolicyMetrics:
    se = spectral_efficiencies(policy, model)
    w = model.masses(policy.region_edges())
    used = w > 0
    return PolicyMetrics(
        ase=float(np.dot(se[used], w[used])),
        se_per_region=se,
        avg_power=avg_power(policy, model),
        p_no_tx=float(model.cdf(policy.first_threshold)),
    )


# ---------------------------------------------------------------------------
# JSON schema
# ---------------------------------------------------------------------------


class PolicyFormatError(ValueError):
    """A serialized policy could not be parsed; the message names the field."""


def policy_to_dict(policy: AdaptationPolicy, model: FadingModel) -> dict:
    """Serialize to the shared policy schema (thresholds in dB, 6 decimals)."""
    m = metrics(policy, model)
    return {
        "kind": policy.kind.value,
        "gbar_db": round(model.gbar_db, 6),
        "thresholds_db": [
            [round(float(v), 6) for v in row] for row in linear_to_db(policy.thresholds)
        ],
        "kappa": None if policy.kappa is None else [float(k) for k in policy.kappa],
        "se": [float(s) for s in m.se_per_region],
        "ase": m.ase,
        "p_no_tx": m.p_no_tx,
    }


def _field(obj: dict, name: str):
    if name not in obj:
        raise PolicyFormatError(f"missing field '{name}'")
    return obj[name]


def policy_from_dict(obj: dict) -> tuple[AdaptationPolicy, FadingModel]:
    """Inverse of :func:`policy_to_dict`. Derived fields (se, ase, p_no_tx) are ignored."""
    if not isinstance(obj, dict):
        raise PolicyFormatError("policy document must be a JSON object")
    kind = _field(obj, "kind")
    try:
        kind = PowerKind(kind)
    except ValueError:
        raise PolicyFormatError(
            f"field 'kind': expected one of {[k.value for k in PowerKind]}, got {kind!r}"
        ) from None
    try:
        gbar_db = float(_field(obj, "gbar_db"))
    except (TypeError, ValueError):
        raise PolicyFormatError(f"field 'gbar_db': not a number: {obj['gbar_db']!r}") from None
    rows = _field(obj, "thresholds_db")
    try:
        thr = np.array(rows, dtype=float)
    except (TypeError, ValueError):
        raise PolicyFormatError("field 'thresholds_db': expected an N x K array of numbers") from None
    if thr.ndim != 2:
        raise PolicyFormatError(f"field 'thresholds_db': expected N x K nesting, got {thr.ndim}-d")
    kappa = obj.get("kappa")
    try:
        policy = AdaptationPolicy(kind, db_to_linear(thr), kappa)
    except (TypeError, ValueError) as exc:
        field = "kappa" if "kappa" in str(exc) else "thresholds_db"
        raise PolicyFormatError(f"field '{field}': {exc}") from None
    try:
        model = Rayleigh(db_to_linear(gbar_db))
    except (ValueError, OverflowError) as exc:
        raise PolicyFormatError(f"field 'gbar_db': {exc}") from None
    return policy, model


def load_policy(text: str) -> tuple[AdaptationPolicy, FadingModel]:
    """Parse a policy JSON document, reporting line/column on syntax errors."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolicyFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return policy_from_dict(obj)


def quantize(policy: AdaptationPolicy, model: FadingModel) -> AdaptationPolicy:
    """The policy exactly as it reads back from its serialized form."""
    return policy_from_dict(policy_to_dict(policy, model))[0]

