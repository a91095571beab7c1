"""Deterministic multi-channel CSMA/CA simulator with legacy and NPCA access.

The engine is event driven but slot accurate. Each channel keeps a clock of
elapsed idle backoff slots, and every counting station stores the clock value
at which it transmits (its *target*). A busy period stops the clock, which is
what freezing a backoff counter amounts to, so frozen stations need no
per-event bookkeeping. Slot boundaries of a channel are anchored at the end of
its last busy period.

Busy periods (successful exchange, collision, OBSS burst) include the trailing
DIFS/EIFS deferral, matching the T_s/T_c accounting of the analytic model.
Backoff therefore resumes at the first slot boundary after a busy period ends.
A station arriving on a channel by switching has not observed that deferral
and must first see DIFS of idle medium there.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .params import ChannelSetup, ConfigError, PhyMacConfig, t_collision_us, t_success_us, us_to_ns
from .report import MetricsReport, TxAttemptRecord, build_report

INF = math.inf
_RNG_BLOCK = 2048

LEGACY = "legacy"
NPCA = "npca"
POLICIES = (LEGACY, NPCA)


class Outcome(str, enum.Enum):
    SUCCESS = "success"
    COLLISION = "collision"


class Decision(str, enum.Enum):
    FROZEN = "frozen"
    DEFER = "defer"
    COUNTDOWN = "countdown"
    TRANSMIT = "transmit"


@dataclass(frozen=True)
class BssConfig:
    """One BSS: its channels (first entry is its primary), size and policy."""

    channels: tuple[int, ...] = (0,)
    n_stations: int = 10
    policy: str = LEGACY

    def __post_init__(self) -> None:
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        if self.n_stations < 1:
            raise ConfigError("a BSS needs at least one station")
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if not self.channels:
            raise ConfigError("a BSS needs at least one channel")
        if len(set(self.channels)) != len(self.channels):
            raise ConfigError("duplicate channel in BSS channel list")

    def to_dict(self) -> dict:
        return {"channels": list(self.channels), "n_stations": self.n_stations, "policy": self.policy}


@dataclass(frozen=True)
class WorldConfig:
    phy: PhyMacConfig = field(default_factory=PhyMacConfig)
    channels: ChannelSetup = field(default_factory=ChannelSetup)
    bss: tuple[BssConfig, ...] = (BssConfig(),)
    # OBSS burst length; None means T_s rounded up to whole slots.
    obss_burst_us: float | None = None
    switch_delay_us: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "bss", tuple(self.bss))
        if not self.bss:
            raise ConfigError("at least one BSS is required")
        n_ch = self.channels.n_channels
        for i, b in enumerate(self.bss):
            for c in b.channels:
                if not 0 <= c < n_ch:
                    raise ConfigError(f"bss {i} references unknown channel {c} (have {n_ch})")
        if self.obss_burst_us is not None and self.obss_burst_us <= 0:
            raise ConfigError("obss_burst_us must be > 0")
        if self.switch_delay_us < 0:
            raise ConfigError("switch_delay_us must be >= 0")

    @property
    def n_stations(self) -> int:
        return sum(b.n_stations for b in self.bss)

    def replace(self, **changes) -> "WorldConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Timing:
    """Integer-nanosecond durations used by the engine."""

    slot: int
    difs: int
    t_success: int
    t_collision: int
    obss_burst: int
    switch_delay: int

    @classmethod
    def from_world(cls, world: WorldConfig) -> "Timing":
        cfg = world.phy
        slot = us_to_ns(cfg.slot_us)
        ts = us_to_ns(t_success_us(cfg))
        if world.obss_burst_us is None:
            burst = -(-ts // slot) * slot
        else:
            burst = us_to_ns(world.obss_burst_us)
        return cls(
            slot=slot,
            difs=us_to_ns(cfg.difs_us),
            t_success=ts,
            t_collision=us_to_ns(t_collision_us(cfg)),
            obss_burst=burst,
            switch_delay=us_to_ns(world.switch_delay_us),
        )


def station_seed(seed: int, station_id: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 0, station_id])


def obss_seed(seed: int, channel_id: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([seed, 1, channel_id])


class _Stream:
    """Buffered draws from one named RNG stream."""

    __slots__ = ("_rng", "_buf", "_i", "_kind", "_param")

    def __init__(self, seq: np.random.SeedSequence, kind: str, param: float = 0.0):
        self._rng = np.random.Generator(np.random.PCG64(seq))
        self._kind = kind
        self._param = param
        self._buf: list = []
        self._i = 0

    def _refill(self) -> None:
        if self._kind == "uniform":
            self._buf = self._rng.random(_RNG_BLOCK).tolist()
        else:
            self._buf = self._rng.geometric(self._param, _RNG_BLOCK).tolist()
        self._i = 0

    def next(self):
        if self._i >= len(self._buf):
            self._refill()
        v = self._buf[self._i]
        self._i += 1
        return v


def draw_backoff(stream: _Stream, cw: int) -> int:
    """Uniform integer on ``[0, cw - 1]``."""
    return int(stream.next() * cw)


@dataclass
class ObssProcess:
    """External occupancy of one channel tuned to a target idle fraction.

    Bursts of length ``B`` arrive on their own clock: after each arrival the
    next one comes ``B`` plus a geometric number of slots later, the slot count
    having success probability ``start_prob_per_slot``. On an otherwise quiet
    channel this is the same as starting a burst at the end of each idle slot
    with that probability, giving an idle fraction ``slot / (slot + q * B) = P``.
    Bursts never preempt a busy channel; ones arriving during in-simulation
    traffic queue and go out as soon as the channel frees, so the OBSS keeps
    a ``1 - P`` share of wall time whatever the BSS load.
    """

    target_idle_prob: float
    busy_duration_us: float
    slot_us: float
    rng_stream_id: int = 0

    @property
    def start_prob_per_slot(self) -> float:
        p = self.target_idle_prob
        q = (1.0 - p) * self.slot_us / (p * self.busy_duration_us)
        return min(max(q, 0.0), 1.0)

    @property
    def active(self) -> bool:
        return self.start_prob_per_slot > 0.0


class _Channel:
    __slots__ = (
        "idx", "busy", "busy_until", "idle_since", "clock_base", "cause",
        "occupants", "bss_ids", "members", "deferring", "next_tx", "dirty",
        "obss", "obss_stream", "onset_at", "next_arrival", "obss_queue", "busy_ns", "idle_ns",
    )

    def __init__(self, idx: int):
        self.idx = idx
        self.busy = False
        self.busy_until = 0
        self.idle_since = 0
        self.clock_base = 0
        self.cause = ""
        self.occupants: list[int] = []
        self.bss_ids: frozenset[int] = frozenset()
        # station id -> channel clock value at which it transmits
        self.members: dict[int, int] = {}
        # station id -> (ready_at, counter) for stations still waiting out DIFS
        self.deferring: dict[int, tuple[int, int]] = {}
        self.next_tx = INF
        self.dirty = True
        self.obss: ObssProcess | None = None
        self.obss_stream: _Stream | None = None
        self.onset_at = INF
        # OBSS bursts arrive on their own schedule and queue while the channel is busy
        self.next_arrival = INF
        self.obss_queue = 0
        self.busy_ns = {"success": 0, "collision": 0, "obss": 0}
        self.idle_ns = 0

    def clock_at(self, now: int, slot: int) -> int:
        if self.busy:
            return self.clock_base
        return self.clock_base + (now - self.idle_since) // slot

    @property
    def sensed_busy(self) -> bool:
        return self.busy


class StationState:
    """Per-station MAC state."""

    __slots__ = (
        "station_id", "bss_id", "policy", "channels", "primary", "operating_channel",
        "backoff_stage", "pending_since", "transmitting", "stream",
        "successes", "collisions", "packets", "delays", "switches",
    )

    def __init__(self, station_id: int, bss_id: int, policy: str, channels: tuple[int, ...], stream: _Stream):
        self.station_id = station_id
        self.bss_id = bss_id
        self.policy = policy
        self.channels = channels
        self.primary = channels[0]
        self.operating_channel = channels[0]
        self.backoff_stage = 0
        self.pending_since = 0
        self.transmitting = False
        self.stream = stream
        self.successes = 0
        self.collisions = 0
        self.packets = 0
        self.delays: list[int] = []
        self.switches = 0


def sense_and_backoff_step(station: StationState, channel: _Channel, now: int, slot: int) -> tuple[Decision, int]:
    """Backoff status of ``station`` on its operating ``channel`` at slot boundary ``now``.

    Returns the decision and the current counter value. A busy channel
    freezes the counter (the idle-slot clock stops); an idle one decrements it
    once per idle slot after the DIFS wait; the station transmits when it
    reaches zero.
    """
    sid = station.station_id
    if channel.busy:
        return Decision.FROZEN, channel.members[sid] - channel.clock_base
    if sid in channel.deferring:
        ready_at, counter = channel.deferring[sid]
        if ready_at > now:
            return Decision.DEFER, counter
    counter = channel.members[sid] - channel.clock_at(now, slot)
    return (Decision.TRANSMIT if counter == 0 else Decision.COUNTDOWN), counter


def legacy_bonding_decision(station: StationState, channels: Sequence[_Channel]) -> list[int]:
    """Primary plus the longest run of idle non-primary channels, in priority order."""
    used = [station.primary]
    for c in station.channels[1:]:
        if channels[c].busy:
            break
        used.append(c)
    return used


def npca_switch_decision(station: StationState, channels: Sequence[_Channel]) -> int:
    """Channel an NPCA station should operate on given current channel states.

    A station on the primary leaves only when the primary is occupied by
    something other than its own BSS, for the first idle non-primary channel.
    A station on a non-primary channel goes back to the primary once the
    primary is idle and its own channel is busy; if both are busy it hops to
    the first idle non-primary channel, if any.
    """
    prim = channels[station.primary]
    cur = station.operating_channel
    if cur == station.primary:
        if not prim.busy or station.bss_id in prim.bss_ids:
            return cur
    elif not channels[cur].busy:
        return cur
    elif not prim.busy:
        return station.primary
    for c in station.channels[1:]:
        if c != cur and not channels[c].busy:
            return c
    return cur


def resolve_slot_transmissions(
    starters_by_channel: dict[int, list[int]],
    onsets: Iterable[int],
) -> dict[int, str]:
    """Per-channel outcome for transmissions beginning at the same instant.

    Values are ``"success"``, ``"collision"``, ``"obss_collision"`` (in-BSS
    starter(s) hit by an OBSS burst beginning together) or ``"obss"``.
    """
    onsets = set(onsets)
    out: dict[int, str] = {}
    for c in sorted(set(starters_by_channel) | onsets):
        k = len(starters_by_channel.get(c, ()))
        if c in onsets:
            out[c] = "obss_collision" if k else "obss"
        elif k == 1:
            out[c] = "success"
        elif k > 1:
            out[c] = "collision"
    return out


class Simulation:
    """One simulation run. Use :func:`run_simulation` unless stepping manually."""

    def __init__(
        self,
        world: WorldConfig,
        seed: int,
        *,
        record_attempts: bool = False,
        trace: IO[str] | None = None,
    ):
        self.world = world
        self.seed = int(seed)
        self.timing = Timing.from_world(world)
        self.cfg = world.phy
        self.record_attempts = record_attempts
        self.trace = trace
        self.attempts: list[TxAttemptRecord] = []

        self.channels = [_Channel(i) for i in range(world.channels.n_channels)]
        burst_us = self.timing.obss_burst / 1000.0
        for ch, p in zip(self.channels, world.channels.idle_probs):
            proc = ObssProcess(p, burst_us, self.cfg.slot_us, rng_stream_id=ch.idx)
            if proc.active:
                ch.obss = proc
                ch.obss_stream = _Stream(obss_seed(self.seed, ch.idx), "geometric", proc.start_prob_per_slot)

        self.stations: list[StationState] = []
        for b_id, b in enumerate(world.bss):
            for _ in range(b.n_stations):
                sid = len(self.stations)
                st = StationState(sid, b_id, b.policy, b.channels, _Stream(station_seed(self.seed, sid), "uniform"))
                self.stations.append(st)
        self.npca_stations = [s for s in self.stations if s.policy == NPCA and len(s.channels) > 1]
        # successful packets per (bss, channel)
        self.channel_packets = [[0] * len(self.channels) for _ in world.bss]

        self.now = 0
        for ch in self.channels:
            if ch.obss_stream is not None:
                ch.next_arrival = ch.obss_stream.next() * self.timing.slot
            self._schedule_onset(ch, 0)
        for st in self.stations:
            counter = draw_backoff(st.stream, self.cfg.cw_min)
            self.channels[st.primary].members[st.station_id] = counter

    # -- helpers ---------------------------------------------------------

    def _obss_arrivals(self, ch: _Channel, now: int) -> None:
        """Queue every OBSS burst that has arrived by ``now``."""
        while ch.next_arrival <= now:
            ch.obss_queue += 1
            ch.next_arrival += self.timing.obss_burst + ch.obss_stream.next() * self.timing.slot

    def _schedule_onset(self, ch: _Channel, now: int) -> None:
        """Next OBSS burst start on idle channel ``ch``, on its slot grid."""
        if ch.obss_stream is None:
            ch.onset_at = INF
            return
        self._obss_arrivals(ch, now)
        due = now if ch.obss_queue else ch.next_arrival
        slot = self.timing.slot
        ch.onset_at = ch.idle_since + -(-(due - ch.idle_since) // slot) * slot

    def _next_tx(self, ch: _Channel) -> float:
        if ch.dirty:
            if ch.members:
                ch.next_tx = ch.idle_since + (min(ch.members.values()) - ch.clock_base) * self.timing.slot
            else:
                ch.next_tx = INF
            ch.dirty = False
        return ch.next_tx

    def _counter_of(self, st: StationState, now: int) -> int:
        ch = self.channels[st.operating_channel]
        sid = st.station_id
        if sid in ch.deferring:
            ready_at, counter = ch.deferring[sid]
            if ready_at > now or ch.busy:
                return counter
        return ch.members[sid] - ch.clock_at(now, self.timing.slot)

    def _move(self, st: StationState, dest: int, now: int) -> None:
        """Switch ``st`` to channel ``dest``; it must see DIFS idle there first."""
        slot = self.timing.slot
        counter = self._counter_of(st, now)
        old = self.channels[st.operating_channel]
        del old.members[st.station_id]
        old.deferring.pop(st.station_id, None)
        old.dirty = True
        new = self.channels[dest]
        earliest = now + self.timing.switch_delay + self.timing.difs
        ready_at = new.idle_since + -(-(earliest - new.idle_since) // slot) * slot
        new.members[st.station_id] = new.clock_base + (ready_at - new.idle_since) // slot + counter
        new.deferring[st.station_id] = (ready_at, counter)
        new.dirty = True
        st.operating_channel = dest
        st.switches += 1

    def _occupy(self, ch: _Channel, now: int, duration: int, cause: str, occupants: list[int]) -> None:
        slot = self.timing.slot
        ch.idle_ns += now - ch.idle_since
        elapsed = (now - ch.idle_since) // slot
        ch.clock_base += elapsed
        for sid, (ready_at, counter) in ch.deferring.items():
            if ready_at > now:
                ch.members[sid] = ch.clock_base + counter
        ch.deferring.clear()
        ch.busy = True
        ch.busy_until = now + duration
        ch.cause = cause
        ch.occupants = occupants
        ch.bss_ids = frozenset(self.stations[s].bss_id for s in occupants)
        if cause == "obss":
            ch.obss_queue -= 1
        ch.onset_at = INF
        ch.dirty = True
        ch.busy_ns[cause] += min(duration, self.end - now)

    def _release(self, ch: _Channel, now: int) -> None:
        ch.busy = False
        ch.idle_since = now
        ch.occupants = []
        ch.bss_ids = frozenset()
        ch.dirty = True
        self._schedule_onset(ch, now)

    def _emit(self, rec: dict) -> None:
        if self.trace is not None:
            self.trace.write(json.dumps(rec, sort_keys=True) + "\n")

    # -- main loop -------------------------------------------------------

    def run(self, duration_us: float) -> MetricsReport:
        self.end = end = us_to_ns(duration_us)
        slot = self.timing.slot
        t_s, t_c, burst = self.timing.t_success, self.timing.t_collision, self.timing.obss_burst
        chans = self.channels
        stations = self.stations
        cfg = self.cfg
        max_stage = cfg.max_backoff_stage

        while True:
            t = INF
            for ch in chans:
                if ch.busy:
                    ev = ch.busy_until
                else:
                    ev = min(ch.onset_at, self._next_tx(ch))
                if ev < t:
                    t = ev
            if t >= end:
                break
            self.now = t
            changed = False

            # Busy periods ending now.
            finishers: list[int] = []
            for ch in chans:
                if ch.busy and ch.busy_until == t:
                    finishers.extend(s for s in ch.occupants if stations[s].operating_channel == ch.idx)
                    self._release(ch, t)
                    changed = True
            for sid in finishers:
                st = stations[sid]
                st.transmitting = False
                if (
                    st.policy == NPCA
                    and st.operating_channel != st.primary
                    and not chans[st.primary].busy
                ):
                    self._move(st, st.primary, t)

            # Transmissions and OBSS bursts starting now.
            starters: list[int] = []
            onsets: list[int] = []
            for ch in chans:
                if ch.busy:
                    continue
                if ch.onset_at == t:
                    onsets.append(ch.idx)
                if self._next_tx(ch) == t:
                    target = ch.clock_at(t, slot)
                    starters.extend(sid for sid, v in ch.members.items() if v == target)
            if starters or onsets:
                changed = True
                self._start(t, sorted(starters), onsets, t_s, t_c, burst, max_stage)

            if changed and self.npca_stations:
                for st in self.npca_stations:
                    if st.transmitting:
                        continue
                    dest = npca_switch_decision(st, chans)
                    if dest != st.operating_channel:
                        self._move(st, dest, t)

        for ch in chans:
            if not ch.busy:
                ch.idle_ns += end - ch.idle_since
        self.now = end
        return build_report(self, end)

    def _start(self, t, starters, onsets, t_s, t_c, burst, max_stage) -> None:
        chans = self.channels
        stations = self.stations
        cfg = self.cfg
        by_channel: dict[int, list[int]] = {}
        used: dict[int, list[int]] = {}
        for sid in starters:
            st = stations[sid]
            if st.operating_channel == st.primary:
                chs = legacy_bonding_decision(st, chans)
            else:
                chs = [st.operating_channel]
            used[sid] = chs
            for c in chs:
                by_channel.setdefault(c, []).append(sid)

        outcomes = resolve_slot_transmissions(by_channel, onsets)
        for c, kind in outcomes.items():
            occ = by_channel.get(c, [])
            if kind == "success":
                self._occupy(chans[c], t, t_s, "success", occ)
            elif kind == "collision":
                self._occupy(chans[c], t, t_c, "collision", occ)
            elif kind == "obss_collision":
                self._occupy(chans[c], t, max(burst, t_c), "obss", occ)
            else:
                self._occupy(chans[c], t, burst, "obss", occ)
            if kind in ("obss", "obss_collision"):
                self._emit({"time_us": t / 1000, "kind": "obss", "station": None, "channels": [c], "outcome": kind})

        for sid in starters:
            st = stations[sid]
            chs = used[sid]
            op = chans[st.operating_channel]
            ok = outcomes[st.operating_channel] == "success"
            # a bonded PPDU is one frame: it is lost if any of its channels fails
            ok = ok and all(outcomes[c] == "success" for c in chs)
            delivered = len(chs) if ok else 0
            st.packets += delivered
            if ok:
                for c in chs:
                    self.channel_packets[st.bss_id][c] += 1
            delay = t - st.pending_since
            end_t = op.busy_until
            if ok:
                st.successes += 1
                st.delays.append(delay)
                st.backoff_stage = 0
                st.pending_since = end_t
            else:
                st.collisions += 1
                st.backoff_stage = min(st.backoff_stage + 1, max_stage)
            st.transmitting = True
            counter = draw_backoff(st.stream, cfg.contention_window(st.backoff_stage))
            op.members[sid] = op.clock_base + counter
            op.dirty = True
            outcome = Outcome.SUCCESS if ok else Outcome.COLLISION
            if self.record_attempts:
                self.attempts.append(
                    TxAttemptRecord(
                        station_id=sid,
                        bss_id=st.bss_id,
                        channel_ids=tuple(chs),
                        start_us=t / 1000,
                        end_us=end_t / 1000,
                        outcome=outcome.value,
                        access_delay_us=delay / 1000,
                        packets=delivered,
                    )
                )
            self._emit(
                {"time_us": t / 1000, "kind": "tx", "station": sid, "channels": list(chs), "outcome": outcome.value}
            )


def run_simulation(
    world: WorldConfig,
    duration_us: float,
    seed: int,
    *,
    record_attempts: bool = False,
    trace: IO[str] | None = None,
) -> MetricsReport:
    """Simulate ``world`` for ``duration_us`` microseconds with master ``seed``."""
    if duration_us < 0:
        raise ValueError("duration must be >= 0")
    sim = Simulation(world, seed, record_attempts=record_attempts, trace=trace)
    return sim.run(duration_us)
