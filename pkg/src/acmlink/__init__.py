"""Multi-code rate and power adaptation for block-fading links.

Designs SNR thresholds and per-region power levels that maximize average
spectral efficiency without information outage, evaluates them analytically
and by Monte-Carlo simulation, and compares them with capacity baselines.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .baselines import (
    ArtResult,
    CapacityPoint,
    art_two_region,
    capacity_opra,
    capacity_ora,
    gamma_cut,
)
from .design import (
    DesignResult,
    DesignSpec,
    design,
    design_constant,
    design_continuous,
    design_discrete,
    design_with_outage_cap,
)
from .fading import FadingModel, Rayleigh, SnrRegion, db_to_linear, linear_to_db
from .numerics import OptimizerReport, Tolerance
from .policy import (
    AdaptationPolicy,
    PolicyFormatError,
    PolicyMetrics,
    PowerKind,
    load_policy,
    metrics,
    policy_from_dict,
    policy_to_dict,
)
from .sim import SimConfig, SimReport, simulate, sweep_simulate

__all__ = [
    "AdaptationPolicy",
    "ArtResult",
    "CapacityPoint",
    "DesignResult",
    "DesignSpec",
    "FadingModel",
    "OptimizerReport",
    "PolicyFormatError",
    "PolicyMetrics",
    "PowerKind",
    "Rayleigh",
    "SimConfig",
    "SimReport",
    "SnrRegion",
    "Tolerance",
    "art_two_region",
    "capacity_opra",
    "capacity_ora",
    "db_to_linear",
    "design",
    "design_constant",
    "design_continuous",
    "design_discrete",
    "design_with_outage_cap",
    "gamma_cut",
    "linear_to_db",
    "load_policy",
    "metrics",
    "policy_from_dict",
    "policy_to_dict",
    "simulate",
    "sweep_simulate",
]
