"""Legacy and NPCA multi-channel Wi-Fi access: analytic model and simulator."""

from .analytic import (
    access_delay,
    legacy_throughput,
    npca_throughput,
    single_channel_throughput,
    solve_bianchi,
)
from .params import ChannelSetup, ConfigError, PhyMacConfig, default_config
from .report import MetricsReport, Tolerances, emit_csv, validate
from .scenarios import (
    ScenarioResult,
    ScenarioSpec,
    preset_delay_analysis,
    preset_single_bss_occupancy,
    preset_two_bss,
    run_scenario,
)
from .simcore import BssConfig, WorldConfig, run_simulation

__version__ = "0.1.0"

__all__ = [
    "BssConfig",
    "ChannelSetup",
    "ConfigError",
    "MetricsReport",
    "PhyMacConfig",
    "ScenarioResult",
    "ScenarioSpec",
    "Tolerances",
    "WorldConfig",
    "access_delay",
    "default_config",
    "emit_csv",
    "legacy_throughput",
    "npca_throughput",
    "preset_delay_analysis",
    "preset_single_bss_occupancy",
    "preset_two_bss",
    "run_scenario",
    "run_simulation",
    "single_channel_throughput",
    "solve_bianchi",
    "validate",
]
