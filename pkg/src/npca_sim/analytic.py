"""Closed-form saturation throughput and access-delay model.

Single-channel throughput follows Bianchi's saturated DCF model. The
multi-channel extensions weight that throughput by how many 20 MHz channels a
transmission can use: legacy devices bond an idle prefix of non-primary
channels behind an idle primary, while NPCA devices additionally move their
backoff to the first idle non-primary channel when the primary is busy.

All functions are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .params import ChannelSetup, PhyMacConfig, payload_airtime_us, t_collision_us, t_success_us

BISECTION_MAX_ITER = 200
RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class BianchiSolution:
    tau: float
    p_cond: float
    n_stations: int
    residual: float


@dataclass(frozen=True)
class ThroughputBreakdown:
    """Throughputs in Mbps. ``per_channel_npca`` is ``[S_pr, S_1, ..., S_N]``."""

    s_single: float
    s_legacy: float
    s_npca: float
    per_channel_npca: tuple[float, ...]
    f_coeffs: tuple[float, ...]
    # Literal expansion of the published closed form, only filled on request.
    s_npca_closed_form: float | None = None


@dataclass(frozen=True)
class DelayEstimate:
    expected_access_delay_us: float
    components: tuple[float, float, float, float]
    # The approximation holds for a large maximum contention window only.
    assumes_large_cw_max: bool = True
    # Occupancy terms T* and C* coincide, so the second component is always 0.
    other_station_term_zero: bool = field(default=True)


def tau_of_p(p: float, w: int, m: int) -> float:
    """Per-slot transmit probability given conditional collision probability.

    Uses ``(1 - (2p)^m) / (1 - 2p) = sum_{i<m} (2p)^i`` so the expression stays
    finite at ``p = 1/2``.
    """
    geo = sum((2.0 * p) ** i for i in range(m))
    return 2.0 / ((w + 1) + p * w * geo)


def solve_bianchi(n: int, cfg: PhyMacConfig) -> BianchiSolution:
    """Solve the coupled (tau, p) fixed point by bisection on ``p``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    w, m = cfg.cw_min, cfg.max_backoff_stage
    if w < 2:
        raise ValueError("cw_min must be >= 2")
    if n == 1:
        return BianchiSolution(tau=tau_of_p(0.0, w, m), p_cond=0.0, n_stations=1, residual=0.0)

    def g(p: float) -> float:
        return p - (1.0 - (1.0 - tau_of_p(p, w, m)) ** (n - 1))

    lo, hi = 0.0, 1.0
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo < 0.0 < g_hi):
        raise SolverError(f"no root bracketed in [0, 1] for n={n}")
    for _ in range(BISECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        g_mid = g(mid)
        if g_mid == 0.0:
            lo = hi = mid
            break
        if g_mid < 0.0:
            lo = mid
        else:
            hi = mid
    p = 0.5 * (lo + hi)
    tau = tau_of_p(p, w, m)
    residual = abs(p - (1.0 - (1.0 - tau) ** (n - 1)))
    if residual > RESIDUAL_TOL:
        raise SolverError(f"fixed point residual {residual:g} above tolerance for n={n}")
    return BianchiSolution(tau=tau, p_cond=p, n_stations=n, residual=residual)


def p_transmit(tau: float, n: int) -> float:
    """Probability that at least one of ``n`` stations transmits in a slot."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    if n < 1:
        raise ValueError("n must be >= 1")
    return 1.0 - (1.0 - tau) ** n


def p_success(tau: float, n: int) -> float:
    """Probability that a slot with a transmission holds exactly one."""
    ptr = p_transmit(tau, n)
    if ptr == 0.0:
        raise ValueError("p_success is undefined when no station transmits (tau=0)")
    return n * tau * (1.0 - tau) ** (n - 1) / ptr


def _throughput_from_tau(tau: float, n: int, cfg: PhyMacConfig) -> float:
    ptr = p_transmit(tau, n)
    ps = p_success(tau, n)
    ts, tc = t_success_us(cfg), t_collision_us(cfg)
    num = ps * ptr * cfg.payload_bits
    den = (1.0 - ptr) * cfg.slot_us + ptr * ps * ts + ptr * (1.0 - ps) * tc
    return num / den


def single_channel_throughput(n: int, cfg: PhyMacConfig) -> float:
    """Saturation throughput of ``n`` stations on one channel, in Mbps."""
    sol = solve_bianchi(n, cfg)
    return _throughput_from_tau(sol.tau, n, cfg)


def normalized_throughput(n: int, cfg: PhyMacConfig) -> float:
    """Fraction of channel time spent carrying successful payload."""
    return single_channel_throughput(n, cfg) / cfg.data_rate_mbps


def f_coeff(m: int, idle_probs: Sequence[float]) -> float:
    """Expected channel multiplier when non-primary channel ``m`` (1-based) is next in line.

    ``idle_probs`` holds the non-primary idle probabilities ``[P_1, ..., P_N]``.
    ``m = N + 1`` gives 1 (no channel left to bond).
    """
    n = len(idle_probs)
    if not 1 <= m <= n + 1:
        raise ValueError(f"m must lie in [1, {n + 1}], got {m}")
    total, prod = 1.0, 1.0
    for j in range(m - 1, n):
        prod *= idle_probs[j]
        total += prod
    return total


def legacy_outcome_terms(s: float, idle_probs: Sequence[float]) -> list[float]:
    """Throughput of each bonding outcome: ``k`` channels used, k = 1..N+1.

    Outcome ``k`` needs non-primary channels ``1..k-1`` idle and channel ``k``
    busy; the all-idle outcome uses every one of the ``N + 1`` channels.
    """
    n = len(idle_probs)
    terms = []
    prefix = 1.0
    for k in range(1, n + 1):
        terms.append(k * s * prefix * (1.0 - idle_probs[k - 1]))
        prefix *= idle_probs[k - 1]
    terms.append((n + 1) * s * prefix)
    return terms


def legacy_from_single(s: float, channels: ChannelSetup) -> float:
    return s * f_coeff(1, channels.nonprimary_idle_probs)


def legacy_throughput(n: int, cfg: PhyMacConfig, channels: ChannelSetup) -> float:
    """Legacy multi-channel throughput: single-channel ``S`` times ``F(1)``."""
    return legacy_from_single(single_channel_throughput(n, cfg), channels)


def npca_cascade(s: float, channels: ChannelSetup) -> list[float]:
    """Per-channel NPCA throughputs ``[S_pr, S_1, ..., S_N]`` for single-channel ``s``.

    Channel ``c`` carries traffic when the primary and channels ``1..c-1`` are
    busy and ``c`` is idle; it can then bond channels ``c+1..N`` via ``F(c+1)``.
    """
    pr = channels.primary_idle_prob
    probs = channels.nonprimary_idle_probs
    if pr <= 0.0 or any(p <= 0.0 for p in probs):
        raise ValueError("idle probabilities must be > 0")
    out = [s * f_coeff(1, probs)]
    busy_odds = s * (1.0 - pr) / pr
    for c in range(1, len(probs) + 1):
        out.append(busy_odds * probs[c - 1] * f_coeff(c + 1, probs))
        busy_odds *= (1.0 - probs[c - 1]) / probs[c - 1]
    return out


def npca_closed_form_literal(s: float, channels: ChannelSetup) -> float:
    """Term-by-term expansion of the published NPCA closed form (diagnostics only).

    It does not agree with the per-channel cascade; kept for comparison.
    """
    pr = channels.primary_idle_prob
    probs = channels.nonprimary_idle_probs
    n = len(probs)
    extra = 0.0
    for t in range(1, n + 1):
        inner = 0.0
        for i in range(t, n + 1):
            inner += math.prod(probs[t - 1:i])
        extra += probs[t - 1] * inner
    return s * (f_coeff(1, probs) + (1.0 - pr) / pr * extra)


def npca_throughput(
    n: int,
    cfg: PhyMacConfig,
    channels: ChannelSetup,
    *,
    literal_closed_form: bool = False,
    s: float | None = None,
) -> ThroughputBreakdown:
    """Full single/legacy/NPCA breakdown for ``n`` stations.

    ``s`` overrides the single-channel throughput (e.g. 1.0 for normalised
    multipliers); by default it is the Bianchi value for ``n`` stations.
    """
    if s is None:
        s = single_channel_throughput(n, cfg)
    probs = channels.nonprimary_idle_probs
    per_channel = npca_cascade(s, channels)
    total = 0.0
    for v in per_channel:
        total += v
    return ThroughputBreakdown(
        s_single=s,
        s_legacy=legacy_from_single(s, channels),
        s_npca=total,
        per_channel_npca=tuple(per_channel),
        f_coeffs=tuple(f_coeff(m, probs) for m in range(1, len(probs) + 2)),
        s_npca_closed_form=npca_closed_form_literal(s, channels) if literal_closed_form else None,
    )


def access_delay(n: int, cfg: PhyMacConfig) -> DelayEstimate:
    """Expected MAC access delay (us) of a tagged station among ``n``."""
    sol = solve_bianchi(n, cfg)
    tau = sol.tau
    ptr = p_transmit(tau, n)
    if tau >= 1.0 or ptr >= 1.0:
        raise ValueError("access delay is singular for tau = 1 or P_tr = 1")
    pkt = payload_airtime_us(cfg)
    t_own = pkt + cfg.difs_us
    c_occ = pkt + cfg.sifs_us + cfg.ack_us + cfg.difs_us
    t_other = c_other = c_occ
    backoff = (cfg.slot_us + ptr * c_other) / (tau * (1.0 - ptr))
    others = (n - 1) * (t_other - c_other) / (1.0 - tau)
    collisions = ptr * c_occ / (1.0 - ptr)
    components = (backoff, others, collisions, t_own)
    return DelayEstimate(expected_access_delay_us=sum(components), components=components)
