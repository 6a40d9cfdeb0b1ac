"""Monte-Carlo block-fading simulation of an adaptation policy.

Each block draws one i.i.d. SNR, applies the policy, and checks that the
post-adaptation AWGN capacity covers the chosen rate.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .fading import FadingModel
from .policy import AdaptationPolicy, power_at, rate_at

__all__ = ["SimConfig", "SimReport", "simulate", "sweep_simulate"]

# absorbs rounding where the post-adaptation SNR equals a target exactly
OUTAGE_SLACK = 1e-12


@dataclass(frozen=True)
class SimConfig:
    policy: AdaptationPolicy
    model: FadingModel
    n_blocks: int = 1_000_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")


@dataclass(frozen=True)
class SimReport:
    ase_hat: float
    ase_se: float
    power_hat: float
    power_se: float
    p_no_tx_hat: float
    p_no_tx_se: float
    outage_violations: int
    n_blocks: int

    def as_dict(self) -> dict:
        return asdict(self)

    def interval(self, name: str, z: float = 3.0) -> tuple[float, float]:
        """``estimate -/+ z * standard error`` for ``"ase"``, ``"power"`` or ``"p_no_tx"``."""
        if name not in ("ase", "power", "p_no_tx"):
            raise ValueError(f"no estimate named {name!r}")
        mean, se = getattr(self, f"{name}_hat"), getattr(self, f"{name}_se")
        return mean - z * se, mean + z * se


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    if x.size < 2:
        return float(x.mean()), math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def simulate(cfg: SimConfig) -> SimReport:
    g = cfg.model.sample(cfg.seed, cfg.n_blocks)
    rate = rate_at(cfg.policy, cfg.model, g)
    power = power_at(cfg.policy, cfg.model, g)
    no_tx = g < cfg.policy.first_threshold
    supported = np.log2(1.0 + g * power)
    violations = int(np.count_nonzero(~no_tx & (supported < rate - OUTAGE_SLACK)))
    ase, ase_se = _mean_se(rate)
    pw, pw_se = _mean_se(power)
    p0, p0_se = _mean_se(no_tx.astype(float))
    return SimReport(ase, ase_se, pw, pw_se, p0, p0_se, violations, cfg.n_blocks)


def sweep_simulate(cfgs: list[SimConfig], workers: int | None = None) -> list[SimReport | Exception]:
    """Simulate every config, in order.

    A config that raises does not abort the batch; its slot holds the
    exception instead of a report.
    """
    if not cfgs:
        raise ValueError("need at least one config")

    def run(cfg):
        try:
            return simulate(cfg)
        except Exception as exc:  # noqa: BLE001 - surfaced per element
            return exc

    if workers == 1 or len(cfgs) == 1:
        return [run(c) for c in cfgs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, cfgs))
