"""Max-min fair multigroup multicast beamforming with rate-splitting.

Submodules
----------
model
    Layouts, channels and achievable-rate evaluation.
dof
    Closed-form MMF degrees of freedom in exact arithmetic.
schemes
    Constructive zero-forcing, superposition and partitioned RS designs.
wmmse
    Rate-WMMSE alternating optimization.
harness
    Seeded Monte-Carlo sweeps producing CSV tables.
"""

from . import dof, harness, model, schemes, wmmse
from .dof import DofReport, Regime, dof_report
from .harness import ExperimentConfig, run_contributions, run_dof_check, run_sweep
from .model import (
    ChannelSet,
    GroupLayout,
    RateReport,
    RsPrecoder,
    rates_degraded_sic,
    rates_designated,
    rates_rs,
    sample_channel,
    snr_db_to_power,
)
from .wmmse import AoOptions, AoResult, Mode, ao_solve

__version__ = "0.1.0"

__all__ = [
    "dof",
    "harness",
    "model",
    "schemes",
    "wmmse",
    "DofReport",
    "Regime",
    "dof_report",
    "ExperimentConfig",
    "run_contributions",
    "run_dof_check",
    "run_sweep",
    "ChannelSet",
    "GroupLayout",
    "RateReport",
    "RsPrecoder",
    "rates_degraded_sic",
    "rates_designated",
    "rates_rs",
    "sample_channel",
    "snr_db_to_power",
    "AoOptions",
    "AoResult",
    "Mode",
    "ao_solve",
]
