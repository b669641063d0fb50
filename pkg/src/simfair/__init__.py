"""Max-min fair power allocation and multi-layer wave-based beamforming for
stacked-metasurface downlinks."""

from .channels import ChannelSet, build_channels
from .geometry import ScenarioConfig, build_layout
from .icsi import GdaParams, OptReport, alternating_optimize_icsi, gp_power_allocation
from .metrics import LinkGains, RateReport, fairness_indices, link_gains, rate_report
from .scsi import GdParams, alternating_optimize_scsi, rate_upper_bound
from .stack import BeamformerCascade, PhaseProfile, build_cascade, compose_beamformer

__all__ = [
    "ChannelSet", "build_channels", "ScenarioConfig", "build_layout",
    "GdaParams", "OptReport", "alternating_optimize_icsi", "gp_power_allocation",
    "LinkGains", "RateReport", "fairness_indices", "link_gains", "rate_report",
    "GdParams", "alternating_optimize_scsi", "rate_upper_bound",
    "BeamformerCascade", "PhaseProfile", "build_cascade", "compose_beamformer",
]
