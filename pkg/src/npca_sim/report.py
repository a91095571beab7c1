"""Run metrics, CSV plot data and simulation-versus-model verdicts.

Delays are reported in microseconds throughout.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .scenarios import PointResult, ScenarioResult

CSV_COLUMNS = (
    "sweep_param",
    "value",
    "policy",
    "throughput_mean",
    "throughput_std",
    "delay_mean_us",
    "delay_std_us",
    "analytic_s_leg",
    "analytic_s_npca",
    "analytic_delay_us",
    "seeds",
    "config_hash",
)
CSV_PRECISION = 6
CAUSES = ("success", "collision", "obss", "idle")


@dataclass(frozen=True)
class TxAttemptRecord:
    station_id: int
    bss_id: int
    channel_ids: tuple[int, ...]
    start_us: float
    end_us: float
    outcome: str
    access_delay_us: float
    packets: int = 0


@dataclass(frozen=True)
class MetricsReport:
    duration_us: float
    seed: int
    payload_bits: int
    per_bss_throughput_mbps: tuple[float, ...]
    per_bss_packets: tuple[int, ...]
    per_bss_successes: tuple[int, ...]
    per_bss_collisions: tuple[int, ...]
    per_bss_channel_packets: tuple[tuple[int, ...], ...]
    station_bss: tuple[int, ...]
    access_delay_us: tuple[tuple[float, ...], ...]
    per_channel_busy_ns: tuple[dict, ...]
    measured_idle_fraction: tuple[float, ...]
    attempts: tuple[TxAttemptRecord, ...] | None = field(default=None, compare=True)

    @property
    def per_bss_attempts(self) -> tuple[int, ...]:
        return tuple(s + c for s, c in zip(self.per_bss_successes, self.per_bss_collisions))

    @property
    def per_channel_utilization(self) -> tuple[dict, ...]:
        """Busy-time fractions by cause; each dict sums to 1."""
        out = []
        for busy in self.per_channel_busy_ns:
            total = sum(busy[c] for c in CAUSES)
            if total == 0:
                out.append({"success": 0.0, "collision": 0.0, "obss": 0.0, "idle": 1.0})
            else:
                out.append({c: busy[c] / total for c in CAUSES})
        return tuple(out)

    @property
    def collision_rate(self) -> float:
        attempts = sum(self.per_bss_attempts)
        return sum(self.per_bss_collisions) / attempts if attempts else 0.0

    @property
    def total_throughput_mbps(self) -> float:
        return sum(self.per_bss_throughput_mbps)

    def bss_delay_samples(self, bss_id: int) -> np.ndarray:
        chunks = [d for d, b in zip(self.access_delay_us, self.station_bss) if b == bss_id]
        return np.concatenate([np.asarray(c, dtype=float) for c in chunks]) if chunks else np.empty(0)

    def delay_summary(self, bss_id: int) -> dict:
        x = self.bss_delay_samples(bss_id)
        if x.size == 0:
            return {"n": 0, "mean": math.nan, "p50": math.nan, "p95": math.nan, "min": math.nan, "max": math.nan}
        return {
            "n": int(x.size),
            "mean": float(x.mean()),
            "p50": float(np.percentile(x, 50)),
            "p95": float(np.percentile(x, 95)),
            "min": float(x.min()),
            "max": float(x.max()),
        }

    def to_json(self) -> str:
        """Canonical serialisation; equal reports give identical strings."""
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))


def build_report(sim, end_ns: int) -> MetricsReport:
    n_bss = len(sim.world.bss)
    duration_us = end_ns / 1000.0
    bits = sim.cfg.payload_bits
    packets = [0] * n_bss
    successes = [0] * n_bss
    collisions = [0] * n_bss
    for st in sim.stations:
        packets[st.bss_id] += st.packets
        successes[st.bss_id] += st.successes
        collisions[st.bss_id] += st.collisions
    thr = tuple(p * bits / duration_us if duration_us > 0 else 0.0 for p in packets)

    busy, idle_frac = [], []
    for ch in sim.channels:
        d = dict(ch.busy_ns)
        d["idle"] = ch.idle_ns
        busy.append(d)
        idle_frac.append(1.0 - d["obss"] / end_ns if end_ns > 0 else 1.0)

    return MetricsReport(
        duration_us=duration_us,
        seed=sim.seed,
        payload_bits=bits,
        per_bss_throughput_mbps=thr,
        per_bss_packets=tuple(packets),
        per_bss_successes=tuple(successes),
        per_bss_collisions=tuple(collisions),
        per_bss_channel_packets=tuple(tuple(row) for row in sim.channel_packets),
        station_bss=tuple(st.bss_id for st in sim.stations),
        access_delay_us=tuple(tuple(d / 1000.0 for d in st.delays) for st in sim.stations),
        per_channel_busy_ns=tuple(busy),
        measured_idle_fraction=tuple(idle_frac),
        attempts=tuple(sim.attempts) if sim.record_attempts else None,
    )


# -- CSV -------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{float(x):.{CSV_PRECISION}f}"


def csv_rows(result: "ScenarioResult") -> list[list[str]]:
    return point_rows(result.points)


def point_rows(points: Sequence["PointResult"]) -> list[list[str]]:
    rows = []
    for pt in points:
        rows.append(
            [
                pt.sweep_param,
                _fmt(pt.value),
                pt.policy_label,
                _fmt(pt.throughput_mean),
                _fmt(pt.throughput_std),
                _fmt(pt.delay_mean_us),
                _fmt(pt.delay_std_us),
                _fmt(pt.analytic_s_leg),
                _fmt(pt.analytic_s_npca),
                _fmt(pt.analytic_delay_us),
                " ".join(str(s) for s in pt.seeds),
                pt.config_hash,
            ]
        )
    return rows


def write_csv_header(fh) -> None:
    csv.writer(fh, lineterminator="\n").writerow(CSV_COLUMNS)


def write_csv_rows(fh, rows: Sequence[Sequence[str]]) -> None:
    csv.writer(fh, lineterminator="\n").writerows(rows)


def emit_csv(result: "ScenarioResult", path: str | os.PathLike) -> str:
    """Write plot data for ``result``; one row per sweep value, variant and BSS."""
    if not result.points:
        raise ValueError("cannot emit an empty result")
    try:
        with open(path, "w", newline="") as fh:
            write_csv_header(fh)
            write_csv_rows(fh, csv_rows(result))
    except OSError as exc:
        raise OSError(f"failed to write {os.fspath(path)}: {exc}") from exc
    return os.fspath(path)


def read_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header in {os.fspath(path)}")
        out = []
        for row in reader:
            rec: dict = dict(row)
            for k in CSV_COLUMNS:
                if k not in ("sweep_param", "policy", "seeds", "config_hash"):
                    rec[k] = float(row[k])
            rec["seeds"] = [int(s) for s in row["seeds"].split()]
            out.append(rec)
        return out


# -- validation ------------------------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    throughput: float = 0.10


@dataclass(frozen=True)
class Verdict:
    check: str
    sweep_param: str
    value: float
    label: str
    passed: bool
    observed: float
    reference: float
    ratio: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.check:<10} {self.sweep_param}={self.value:g} {self.label:<14} "
            f"observed={self.observed:.4f} reference={self.reference:.4f} ratio={self.ratio:.4f}"
        )


def validate(result: "ScenarioResult", tolerances: Tolerances | None = None) -> tuple[list[Verdict], int]:
    """Check simulated throughput against the model and NPCA dominance.

    Throughput is checked only for points whose model reference applies (see
    ``PointResult.comparable``). Dominance compares, per sweep value and BSS,
    the NPCA variant with the all-legacy one wherever that BSS's policy
    differs. Returns the verdicts and an exit status (0 iff all pass).
    """
    tol = (tolerances or Tolerances()).throughput
    verdicts: list[Verdict] = []
    for pt in result.points:
        if not pt.comparable:
            continue
        ref = pt.analytic_reference
        ratio = pt.throughput_mean / ref if ref else math.inf
        verdicts.append(
            Verdict("throughput", pt.sweep_param, pt.value, pt.policy_label, abs(ratio - 1.0) <= tol,
                    pt.throughput_mean, ref, ratio)
        )

    by_key: dict[tuple, dict] = {}
    for pt in result.points:
        by_key.setdefault((pt.value, pt.bss_index), {})[pt.variant] = pt
    for (value, _bss), variants in sorted(by_key.items(), key=lambda kv: kv[0]):
        n, leg = variants.get("npca"), variants.get("legacy")
        if n is not None and leg is not None and n.policy == "npca" and leg.policy == "legacy":
            ratio = n.throughput_mean / leg.throughput_mean if leg.throughput_mean else math.inf
            verdicts.append(
                Verdict("dominance", n.sweep_param, value, n.policy_label, n.throughput_mean >= leg.throughput_mean,
                        n.throughput_mean, leg.throughput_mean, ratio)
            )
    status = 0 if all(v.passed for v in verdicts) else 1
    return verdicts, status


def summary_text(verdicts: Sequence[Verdict], status: int) -> str:
    lines = [v.line() for v in verdicts]
    n_pass = sum(v.passed for v in verdicts)
    lines.append(f"{n_pass}/{len(verdicts)} checks passed; status={'PASS' if status == 0 else 'FAIL'}")
    return "\n".join(lines) + "\n"
