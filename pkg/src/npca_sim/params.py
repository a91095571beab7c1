"""PHY/MAC timing constants, channel setups and unit conversions.

Durations on :class:`PhyMacConfig` are expressed in microseconds, which is how
they are configured and reported. The simulator works on integer nanoseconds;
use :func:`us_to_ns` and the ``*_ns`` helpers for that side.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

# HE (802.11ax) rates, 20 MHz, one spatial stream, 0.8 us guard interval.
MCS_RATES_20MHZ_1SS: dict[int, float] = {
    0: 8.6,
    1: 17.2,
    2: 25.8,
    3: 34.4,
    4: 51.6,
    5: 68.8,
    6: 77.4,
    7: 86.0,
    8: 103.2,
    9: 114.7,
    10: 129.0,
    11: 143.4,
}

DEFAULT_MCS = 7


class ConfigError(ValueError):
    """Raised for an invalid configuration value or topology."""


def _is_power_of_two(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


def mcs_rate_mbps(mcs: int) -> float:
    """Per-20 MHz data rate for a single spatial stream at index ``mcs``."""
    try:
        return MCS_RATES_20MHZ_1SS[mcs]
    except KeyError:
        raise ConfigError(f"unknown MCS index {mcs}") from None


def us_to_ns(us: float) -> int:
    return int(round(us * 1000.0))


@dataclass(frozen=True)
class PhyMacConfig:
    """Timing and contention parameters shared by the model and the simulator.

    DIFS, EIFS and the maximum backoff stage are derived, never stored, so
    they cannot drift from the quantities they depend on.
    """

    slot_us: float = 9.0
    sifs_us: float = 16.0
    phy_header_us: float = 40.0
    ack_us: float = 32.0
    propagation_us: float = 0.1
    payload_bytes: int = 1500
    data_rate_mbps: float = field(default_factory=lambda: mcs_rate_mbps(DEFAULT_MCS))
    cw_min: int = 16
    cw_max: int = 1024

    def __post_init__(self) -> None:
        for name in ("slot_us", "sifs_us", "data_rate_mbps"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        if self.payload_bytes < 0:
            raise ConfigError(f"payload_bytes must be >= 0, got {self.payload_bytes!r}")
        for name in ("phy_header_us", "ack_us", "propagation_us"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)!r}")
        if not (_is_power_of_two(self.cw_min) and _is_power_of_two(self.cw_max)):
            raise ConfigError("cw_min and cw_max must be powers of two")
        if self.cw_max < self.cw_min:
            raise ConfigError("cw_max must be >= cw_min")

    @property
    def difs_us(self) -> float:
        return self.sifs_us + 2 * self.slot_us

    @property
    def eifs_us(self) -> float:
        # NACK duration is taken equal to the ACK duration.
        return self.sifs_us + self.ack_us + self.difs_us

    @property
    def max_backoff_stage(self) -> int:
        return int(math.log2(self.cw_max // self.cw_min))

    @property
    def payload_bits(self) -> int:
        return self.payload_bytes * 8

    def contention_window(self, stage: int) -> int:
        """Window size at backoff ``stage``, capped at ``cw_max``."""
        return min(self.cw_min << stage, self.cw_max)

    def replace(self, **changes) -> "PhyMacConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PhyMacConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown phy keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class ChannelSetup:
    """One primary channel plus ``N`` non-primary channels.

    The order of ``nonprimary_idle_probs`` is the switching priority: index 0
    (the first non-primary channel) is tried first.
    """

    primary_idle_prob: float = 1.0
    nonprimary_idle_probs: tuple[float, ...] = ()
    channel_bandwidth_mhz: float = 20.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "nonprimary_idle_probs", tuple(float(p) for p in self.nonprimary_idle_probs))
        for p in self.idle_probs:
            if not 0.0 < p <= 1.0:
                raise ConfigError(f"idle probabilities must lie in (0, 1], got {p!r}")
        if self.channel_bandwidth_mhz <= 0:
            raise ConfigError("channel_bandwidth_mhz must be > 0")

    @property
    def n_nonprimary(self) -> int:
        return len(self.nonprimary_idle_probs)

    @property
    def n_channels(self) -> int:
        return 1 + self.n_nonprimary

    @property
    def idle_probs(self) -> tuple[float, ...]:
        """Idle probability per channel index, primary first."""
        return (self.primary_idle_prob, *self.nonprimary_idle_probs)

    def to_dict(self) -> dict:
        return {
            "primary_idle_prob": self.primary_idle_prob,
            "nonprimary_idle_probs": list(self.nonprimary_idle_probs),
            "channel_bandwidth_mhz": self.channel_bandwidth_mhz,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelSetup":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown channels keys: {sorted(unknown)}")
        return cls(**data)


def default_config() -> PhyMacConfig:
    return PhyMacConfig()


def packet_airtime_us(cfg: PhyMacConfig) -> float:
    """PHY header plus payload transmission time."""
    if cfg.data_rate_mbps <= 0:
        raise ConfigError("data rate must be > 0")
    return cfg.phy_header_us + cfg.payload_bits / cfg.data_rate_mbps


def payload_airtime_us(cfg: PhyMacConfig) -> float:
    return cfg.payload_bits / cfg.data_rate_mbps


def t_success_us(cfg: PhyMacConfig) -> float:
    """Channel busy time of a successful exchange, trailing DIFS included."""
    d = cfg.propagation_us
    return (
        cfg.phy_header_us
        + payload_airtime_us(cfg)
        + cfg.sifs_us
        + d
        + cfg.ack_us
        + cfg.difs_us
        + d
    )


def t_collision_us(cfg: PhyMacConfig) -> float:
    """Channel busy time of a collision, trailing EIFS included."""
    return cfg.phy_header_us + payload_airtime_us(cfg) + cfg.propagation_us + cfg.eifs_us


def slots_for(duration_us: float, cfg: PhyMacConfig) -> int:
    """Number of whole slots needed to cover ``duration_us``."""
    return math.ceil(round(duration_us / cfg.slot_us, 9))
