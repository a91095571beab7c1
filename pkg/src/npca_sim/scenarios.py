"""Experiment presets and the sweep engine that runs them.

A :class:`ScenarioSpec` fixes a topology, one swept parameter and a list of
policy variants. :func:`run_scenario` runs every (value, variant, seed)
combination, averages over seeds and attaches the matching model predictions.
"""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from . import analytic
from .config import AUTO, config_hash, world_to_document
from .params import ChannelSetup, ConfigError, PhyMacConfig
from .report import MetricsReport
from .simcore import LEGACY, NPCA, POLICIES, BssConfig, WorldConfig, run_simulation

DEFAULT_SEEDS = (1, 2, 3, 4, 5)
DEFAULT_DURATION_US = 30e6
STATION_COUNTS = (2, 4, 6, 8, 10)
PRIMARY_IDLE_SWEEP = (0.1, 0.2, 0.3, 0.4, 0.5)
FOCI = ("throughput", "delay")


class ScenarioError(RuntimeError):
    """A simulation inside a sweep failed; the message names the point."""


@dataclass(frozen=True)
class Variant:
    """A named assignment of one access policy per BSS."""

    label: str
    policies: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "policies", tuple(self.policies))
        for p in self.policies:
            if p not in POLICIES:
                raise ConfigError(f"variant {self.label!r}: unknown policy {p!r}")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    bss_list: tuple[BssConfig, ...]
    channel_setup: ChannelSetup
    sweep_param: str
    sweep_values: tuple[float, ...]
    variants: tuple[Variant, ...]
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    duration_us: float = DEFAULT_DURATION_US
    phy: PhyMacConfig = field(default_factory=PhyMacConfig)
    obss_burst_us: float | None = None
    switch_delay_us: float = 0.0
    focus: str = "throughput"

    def __post_init__(self) -> None:
        for name in ("bss_list", "sweep_values", "variants", "seeds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.seeds:
            raise ConfigError("a scenario needs at least one seed")
        if any(not isinstance(s, (int, np.integer)) or s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative integers")
        if not self.sweep_values:
            raise ConfigError("a scenario needs at least one sweep value")
        if not self.variants:
            raise ConfigError("a scenario needs at least one variant")
        if self.duration_us < 0:
            raise ConfigError("duration must be >= 0")
        if self.focus not in FOCI:
            raise ConfigError(f"focus must be one of {FOCI}")
        for v in self.variants:
            if len(v.policies) != len(self.bss_list):
                raise ConfigError(f"variant {v.label!r} needs one policy per BSS")
        # building every world checks that each sweep value is in its domain
        for value in self.sweep_values:
            for v in self.variants:
                self.world(value, v)

    @property
    def n_bss(self) -> int:
        return len(self.bss_list)

    def world(self, value: float, variant: Variant) -> WorldConfig:
        """The simulated world at one sweep value under one variant."""
        bss = tuple(dataclasses.replace(b, policy=p) for b, p in zip(self.bss_list, variant.policies))
        world = WorldConfig(
            phy=self.phy,
            channels=self.channel_setup,
            bss=bss,
            obss_burst_us=self.obss_burst_us,
            switch_delay_us=self.switch_delay_us,
        )
        return apply_sweep(world, self.sweep_param, value)

    def replace(self, **changes) -> "ScenarioSpec":
        return dataclasses.replace(self, **changes)

    def to_document(self) -> dict:
        base = WorldConfig(
            phy=self.phy,
            channels=self.channel_setup,
            bss=self.bss_list,
            obss_burst_us=self.obss_burst_us,
            switch_delay_us=self.switch_delay_us,
        )
        doc = world_to_document(base, duration_s=self.duration_us / 1e6, seed=self.seeds[0])
        doc["scenario"] = {
            "name": self.name,
            "sweep_param": self.sweep_param,
            "sweep_values": [float(v) for v in self.sweep_values],
            "seeds": [int(s) for s in self.seeds],
            "focus": self.focus,
            "variant": [{"label": v.label, "policies": list(v.policies)} for v in self.variants],
        }
        return doc

    @classmethod
    def from_document(cls, doc: dict) -> "ScenarioSpec":
        from .config import world_from_document

        if "scenario" not in doc:
            raise ConfigError("config has no [scenario] section")
        sc = dict(doc["scenario"])
        allowed = {"name", "sweep_param", "sweep_values", "seeds", "focus", "variant"}
        unknown = set(sc) - allowed
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        for k in ("name", "sweep_param", "sweep_values"):
            if k not in sc:
                raise ConfigError(f"scenario.{k} is required")
        world, duration_s, seed = world_from_document(doc)
        variants = sc.get("variant") or [{"label": "as-configured", "policies": [b.policy for b in world.bss]}]
        try:
            vs = tuple(Variant(v["label"], tuple(v["policies"])) for v in variants)
        except KeyError as exc:
            raise ConfigError(f"scenario.variant entry lacks {exc}") from None
        return cls(
            name=str(sc["name"]),
            bss_list=world.bss,
            channel_setup=world.channels,
            sweep_param=str(sc["sweep_param"]),
            sweep_values=tuple(sc["sweep_values"]),
            variants=vs,
            seeds=tuple(sc.get("seeds", [seed])),
            duration_us=duration_s * 1e6,
            phy=world.phy,
            obss_burst_us=world.obss_burst_us,
            switch_delay_us=world.switch_delay_us,
            focus=str(sc.get("focus", "throughput")),
        )


def apply_sweep(world: WorldConfig, param: str, value: float) -> WorldConfig:
    """Set ``param`` to ``value`` on ``world``.

    Supported names: ``channels.primary_idle_prob``,
    ``channels.nonprimary_idle_probs.K``, ``bss.n_stations`` (every BSS, kept
    equal), ``bss.K.n_stations``, ``phy.<field>`` and ``sim.switch_delay_us``.
    """
    parts = param.split(".")
    if param == "channels.primary_idle_prob":
        return world.replace(channels=dataclasses.replace(world.channels, primary_idle_prob=float(value)))
    if len(parts) == 3 and parts[:2] == ["channels", "nonprimary_idle_probs"]:
        probs = list(world.channels.nonprimary_idle_probs)
        k = _index(parts[2], len(probs), param)
        probs[k] = float(value)
        return world.replace(channels=dataclasses.replace(world.channels, nonprimary_idle_probs=tuple(probs)))
    if parts[0] == "bss" and parts[-1] == "n_stations" and len(parts) in (2, 3):
        n = _count(value, param)
        if len(parts) == 2 or parts[1] == "*":
            return world.replace(bss=tuple(dataclasses.replace(b, n_stations=n) for b in world.bss))
        k = _index(parts[1], len(world.bss), param)
        bss = list(world.bss)
        bss[k] = dataclasses.replace(bss[k], n_stations=n)
        return world.replace(bss=tuple(bss))
    if len(parts) == 2 and parts[0] == "phy" and parts[1] in {f.name for f in dataclasses.fields(PhyMacConfig)}:
        cast = type(getattr(world.phy, parts[1]))
        v = _count(value, param) if cast is int else float(value)
        return world.replace(phy=world.phy.replace(**{parts[1]: v}))
    if param == "sim.switch_delay_us":
        return world.replace(switch_delay_us=float(value))
    raise ConfigError(f"unsupported sweep parameter {param!r}")


def _index(raw: str, n: int, param: str) -> int:
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"{param}: {raw!r} is not an index") from None
    if not 0 <= k < n:
        raise ConfigError(f"{param}: index {k} out of range")
    return k


def _count(value: float, param: str) -> int:
    if float(value) != int(value):
        raise ConfigError(f"{param} needs an integer value, got {value!r}")
    return int(value)


# -- presets ---------------------------------------------------------------


def preset_single_bss_occupancy() -> ScenarioSpec:
    """One 10-station BSS on two channels, busy primary, mostly idle second channel."""
    return ScenarioSpec(
        name="single_bss_occupancy",
        bss_list=(BssConfig(channels=(0, 1), n_stations=10),),
        channel_setup=ChannelSetup(primary_idle_prob=PRIMARY_IDLE_SWEEP[0], nonprimary_idle_probs=(0.8,)),
        sweep_param="channels.primary_idle_prob",
        sweep_values=PRIMARY_IDLE_SWEEP,
        variants=(Variant(LEGACY, (LEGACY,)), Variant(NPCA, (NPCA,))),
    )


def _two_bss_topology() -> dict:
    return dict(
        bss_list=(BssConfig(channels=(0, 1), n_stations=STATION_COUNTS[0]), BssConfig(channels=(0,), n_stations=STATION_COUNTS[0])),
        channel_setup=ChannelSetup(primary_idle_prob=1.0, nonprimary_idle_probs=(1.0,)),
        sweep_param="bss.n_stations",
        sweep_values=STATION_COUNTS,
    )


def preset_two_bss(policy_bss1: str = LEGACY) -> ScenarioSpec:
    """A 40 MHz BSS1 sharing its primary with a 20 MHz legacy BSS2."""
    if policy_bss1 not in POLICIES:
        raise ConfigError(f"policy must be one of {POLICIES}, got {policy_bss1!r}")
    return ScenarioSpec(
        name=f"two_bss_{policy_bss1}",
        variants=(Variant(policy_bss1, (policy_bss1, LEGACY)),),
        **_two_bss_topology(),
    )


def preset_delay_analysis() -> ScenarioSpec:
    """Two-BSS topology with both BSS1 policies side by side, reported for delay."""
    return ScenarioSpec(
        name="delay_analysis",
        variants=(Variant(LEGACY, (LEGACY, LEGACY)), Variant(NPCA, (NPCA, LEGACY))),
        focus="delay",
        **_two_bss_topology(),
    )


PRESETS: dict[str, Callable[..., ScenarioSpec]] = {
    "single-bss-occupancy": preset_single_bss_occupancy,
    "two-bss": preset_two_bss,
    "delay-analysis": preset_delay_analysis,
}
FIGURE_TAGS = {"single-bss-occupancy": "fig5", "two-bss": "fig6", "delay-analysis": "fig7"}


def get_preset(name: str, policy: str | None = None) -> ScenarioSpec:
    key = name.replace("_", "-")
    if key not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    if key == "two-bss":
        return preset_two_bss(policy or LEGACY)
    if policy is not None:
        raise ConfigError(f"--policy only applies to the two-bss preset")
    return PRESETS[key]()


# -- running ---------------------------------------------------------------


@dataclass(frozen=True)
class PointResult:
    """One BSS under one variant at one sweep value, aggregated over seeds."""

    sweep_param: str
    value: float
    variant: str
    policy: str
    policy_label: str
    bss_index: int
    n_stations: int
    throughput_mean: float
    throughput_std: float
    delay_mean_us: float
    delay_std_us: float
    collision_rate: float
    measured_idle_fraction: tuple[float, ...]
    # per seed, per channel
    idle_fraction_samples: tuple[tuple[float, ...], ...]
    throughput_samples: tuple[float, ...]
    delay_samples_us: tuple[float, ...]
    analytic_s_single: float
    analytic_s_leg: float
    analytic_s_npca: float
    analytic_delay_us: float
    comparable: bool
    seeds: tuple[int, ...]
    config_hash: str

    @property
    def analytic_reference(self) -> float:
        return self.analytic_s_npca if self.policy == NPCA else self.analytic_s_leg


@dataclass(frozen=True)
class ScenarioResult:
    spec: ScenarioSpec
    points: tuple[PointResult, ...]

    def select(self, *, variant: str | None = None, bss_index: int | None = None) -> list[PointResult]:
        return [
            p for p in self.points
            if (variant is None or p.variant == variant) and (bss_index is None or p.bss_index == bss_index)
        ]


@dataclass(frozen=True)
class AnalyticAttachment:
    s_single: float
    s_leg: float
    s_npca: float
    delay_us: float
    comparable: bool


def analytic_for_bss(world: WorldConfig, bss_index: int) -> AnalyticAttachment:
    """Model prediction for one BSS of ``world``.

    Every station whose BSS shares this BSS's primary contends on it, so the
    single-channel throughput is solved for all of them and split in
    proportion to station counts. The BSS's own channel list then gives the
    idle probabilities fed to the multi-channel formulas. The throughput
    prediction is only *comparable* with simulation when everything contending
    on the primary is legacy and the BSS's channels are clean: NPCA stations
    leave the primary mid-backoff, and with external occupancy the model's
    per-channel independence does not describe a backoff that freezes during
    OBSS bursts.
    """
    b = world.bss[bss_index]
    primary = b.channels[0]
    n_shared = sum(o.n_stations for o in world.bss if o.channels[0] == primary)
    probs = world.channels.idle_probs
    own = ChannelSetup(
        primary_idle_prob=probs[primary],
        nonprimary_idle_probs=tuple(probs[c] for c in b.channels[1:]),
    )
    s = analytic.single_channel_throughput(n_shared, world.phy) * b.n_stations / n_shared
    bd = analytic.npca_throughput(n_shared, world.phy, own, s=s)
    delay = analytic.access_delay(n_shared, world.phy).expected_access_delay_us
    sharing = [o for o in world.bss if o.channels[0] == primary]
    comparable = all(o.policy == LEGACY for o in sharing) and all(probs[c] == 1.0 for c in b.channels)
    return AnalyticAttachment(s, bd.s_legacy, bd.s_npca, delay, comparable)


@dataclass(frozen=True)
class _Job:
    spec_name: str
    sweep_param: str
    value: float
    variant: str
    world: WorldConfig
    duration_us: float
    seed: int


def _run_job(job: _Job) -> MetricsReport:
    try:
        return run_simulation(job.world, job.duration_us, job.seed)
    except Exception as exc:
        raise ScenarioError(
            f"{job.spec_name}: {job.sweep_param}={job.value:g} variant={job.variant} seed={job.seed}: {exc}"
        ) from exc


def _jobs(spec: ScenarioSpec) -> list[_Job]:
    return [
        _Job(spec.name, spec.sweep_param, value, v.label, spec.world(value, v), spec.duration_us, seed)
        for value in spec.sweep_values
        for v in spec.variants
        for seed in spec.seeds
    ]


def _sample_std(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if x.size > 1 else 0.0


def _aggregate(spec: ScenarioSpec, value: float, variant: Variant, reports: Sequence[MetricsReport]) -> list[PointResult]:
    world = spec.world(value, variant)
    digest = config_hash({
        "world": world_to_document(world, duration_s=spec.duration_us / 1e6, seed=0),
        "variant": variant.label,
        "scenario": spec.name,
    })
    idle = tuple(float(np.mean([r.measured_idle_fraction[c] for r in reports])) for c in range(world.channels.n_channels))
    points = []
    for b in range(spec.n_bss):
        thr = np.array([r.per_bss_throughput_mbps[b] for r in reports])
        dly = np.array([r.delay_summary(b)["mean"] for r in reports])
        coll = sum(r.per_bss_collisions[b] for r in reports)
        att = sum(r.per_bss_attempts[b] for r in reports)
        an = analytic_for_bss(world, b)
        label = variant.label if spec.n_bss == 1 else f"{variant.label}:bss{b + 1}"
        points.append(
            PointResult(
                sweep_param=spec.sweep_param,
                value=float(value),
                variant=variant.label,
                policy=world.bss[b].policy,
                policy_label=label,
                bss_index=b,
                n_stations=world.bss[b].n_stations,
                throughput_mean=float(thr.mean()),
                throughput_std=_sample_std(thr),
                delay_mean_us=float(np.mean(dly)),
                delay_std_us=_sample_std(dly),
                collision_rate=coll / att if att else 0.0,
                measured_idle_fraction=idle,
                idle_fraction_samples=tuple(tuple(r.measured_idle_fraction) for r in reports),
                throughput_samples=tuple(float(x) for x in thr),
                delay_samples_us=tuple(float(x) for x in dly),
                analytic_s_single=an.s_single,
                analytic_s_leg=an.s_leg,
                analytic_s_npca=an.s_npca,
                analytic_delay_us=an.delay_us,
                comparable=an.comparable,
                seeds=tuple(int(s) for s in spec.seeds),
                config_hash=digest,
            )
        )
    return points


def _reports(jobs: list[_Job], parallelism: int) -> Iterator[MetricsReport]:
    if parallelism <= 1 or len(jobs) <= 1:
        for job in jobs:
            yield _run_job(job)
        return
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        yield from pool.map(_run_job, jobs)


def run_scenario(
    spec: ScenarioSpec,
    parallelism: int = 1,
    on_point: Callable[[list[PointResult]], None] | None = None,
) -> ScenarioResult:
    """Run every simulation of ``spec`` and aggregate per sweep point.

    Results are folded in fixed (value, variant) order whatever
    ``parallelism`` is, so output does not depend on it. ``on_point`` is
    called with the rows of each (value, variant) as soon as they are ready.
    """
    if parallelism < 1:
        raise ConfigError("parallelism must be >= 1")
    jobs = _jobs(spec)
    per_group = len(spec.seeds)
    groups = [(value, v) for value in spec.sweep_values for v in spec.variants]
    points: list[PointResult] = []
    buf: list[MetricsReport] = []
    gi = 0
    for rep in _reports(jobs, parallelism):
        buf.append(rep)
        if len(buf) == per_group:
            value, v = groups[gi]
            rows = _aggregate(spec, value, v, buf)
            points.extend(rows)
            if on_point is not None:
                on_point(rows)
            buf, gi = [], gi + 1
    return ScenarioResult(spec=spec, points=tuple(points))


__all__ = [
    "AUTO",
    "DEFAULT_SEEDS",
    "FIGURE_TAGS",
    "PRESETS",
    "PointResult",
    "ScenarioError",
    "ScenarioResult",
    "ScenarioSpec",
    "Variant",
    "analytic_for_bss",
    "apply_sweep",
    "get_preset",
    "preset_delay_analysis",
    "preset_single_bss_occupancy",
    "preset_two_bss",
    "run_scenario",
]
