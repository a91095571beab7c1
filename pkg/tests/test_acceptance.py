"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The long simulation campaigns (30 s simulated, 5 seeds) are session fixtures
so criteria that read the same runs share them. The delay-analysis preset
simulates exactly the worlds of the two two-BSS presets (checked in
test_scenarios), so criteria 5 to 7 all read that one campaign.
"""

import math
import time

import numpy as np
import pytest

from npca_sim import analytic
from npca_sim.params import ChannelSetup, PhyMacConfig
from npca_sim.report import emit_csv
from npca_sim.scenarios import (
    ScenarioSpec,
    Variant,
    preset_delay_analysis,
    preset_single_bss_occupancy,
    run_scenario,
)
from npca_sim.simcore import BssConfig

import oracles

CFG = PhyMacConfig()


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:>2} {title}: {detail}")
        assert ok, detail

    return emit


def monotone(values, spreads, increasing):
    """True when every step goes the right way, except at most one step
    against the trend that is no larger than the two points' combined spread."""
    bad = 0
    for i in range(len(values) - 1):
        step = values[i + 1] - values[i]
        if (step > 0) == increasing and step != 0:
            continue
        if step == 0 and not increasing:
            continue
        bad += 1
        if abs(step) > math.hypot(spreads[i], spreads[i + 1]) or bad > 1:
            return False
    return True


@pytest.fixture(scope="session")
def bianchi_runs():
    spec = ScenarioSpec(
        name="bianchi_agreement",
        bss_list=(BssConfig((0,), 5),),
        channel_setup=ChannelSetup(),
        sweep_param="bss.n_stations",
        sweep_values=(5, 10, 20),
        variants=(Variant("legacy", ("legacy",)),),
    )
    t0 = time.perf_counter()
    res = run_scenario(spec)
    return res, time.perf_counter() - t0


@pytest.fixture(scope="session")
def occupancy():
    return run_scenario(preset_single_bss_occupancy())


@pytest.fixture(scope="session")
def two_bss():
    return run_scenario(preset_delay_analysis())


def _by(res, variant, bss):
    return [p for p in res.points if p.variant == variant and p.bss_index == bss]


def test_c01_bianchi_agreement(bianchi_runs, verdict):
    res, wall = bianchi_runs
    errs = {int(p.value): p.throughput_mean / analytic.single_channel_throughput(int(p.value), CFG) - 1 for p in res.points}
    ok = all(abs(e) <= 0.05 for e in errs.values())
    detail = ", ".join(f"n={n}: {e:+.2%}" for n, e in errs.items()) + f" (wall {wall:.0f} s)"
    verdict(1, "Bianchi agreement within 5%", ok, detail)


def test_c02_analytic_dominance(verdict):
    rng = np.random.default_rng(20240601)
    counter = 0
    for _ in range(1000):
        n_ch = int(rng.integers(1, 4))
        pr = float(rng.uniform(0.05, 0.99))
        probs = tuple(float(x) for x in rng.uniform(0.05, 0.99, n_ch))
        bd = analytic.npca_throughput(10, CFG, ChannelSetup(pr, probs))
        if not bd.s_npca > bd.s_legacy:
            counter += 1
    verdict(2, "S_npca > S_leg on 1000 random points", counter == 0, f"{counter} counterexamples")


def test_c03_legacy_telescoping(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        n_ch = int(rng.integers(0, 6))
        probs = tuple(float(x) for x in rng.uniform(0.0, 1.0, n_ch))
        s = float(rng.uniform(1, 100))
        closed = analytic.legacy_from_single(s, ChannelSetup(1.0, tuple(max(p, 1e-12) for p in probs)))
        summed = math.fsum(analytic.legacy_outcome_terms(s, tuple(max(p, 1e-12) for p in probs)))
        enum = s * oracles.legacy_multiplier_enumerated(tuple(max(p, 1e-12) for p in probs))
        worst = max(worst, abs(summed - closed) / closed, abs(enum - closed) / closed)
    verdict(3, "legacy outcome sum equals closed form", worst <= 1e-9, f"max relative error {worst:.2e}")


def test_c04_single_bss_occupancy(occupancy, verdict):
    leg = _by(occupancy, "legacy", 0)
    npc = _by(occupancy, "npca", 0)
    ratios = [n.throughput_mean / l.throughput_mean for n, l in zip(npc, leg)]
    per_seed = [np.array(n.throughput_samples) / np.array(l.throughput_samples) for n, l in zip(npc, leg)]
    spreads = [float(np.std(r, ddof=1)) for r in per_seed]
    exceeds = all(n.throughput_mean > l.throughput_mean for n, l in zip(npc, leg))
    mono = monotone(ratios, spreads, increasing=False)
    gain = ratios[0] - 1
    ok = exceeds and mono and gain >= 0.5
    detail = "ratios " + " ".join(f"{p.value:g}:{r:.3f}" for p, r in zip(leg, ratios))
    detail += f"; gain at 0.1 = {gain:.0%}; npca>legacy={exceeds}; monotone={mono}"
    verdict(4, "single-BSS occupancy trend", ok, detail)


def test_c05_two_bss_legacy_ratio(two_bss, verdict):
    b1, b2 = _by(two_bss, "legacy", 0), _by(two_bss, "legacy", 1)
    ratios = {int(p.value): p.throughput_mean / q.throughput_mean for p, q in zip(b1, b2)}
    ok = all(1.8 <= r <= 2.2 for r in ratios.values())
    verdict(5, "two-BSS legacy BSS1/BSS2 in [1.8, 2.2]", ok, ", ".join(f"n={n}: {r:.3f}" for n, r in ratios.items()))


def test_c06_coexistence_improvement(two_bss, verdict):
    rows = []
    ok = True
    for b in (0, 1):
        for l, n in zip(_by(two_bss, "legacy", b), _by(two_bss, "npca", b)):
            ok &= n.throughput_mean > l.throughput_mean
            rows.append(f"bss{b + 1} n={l.value:g}: {l.throughput_mean:.2f}->{n.throughput_mean:.2f}")
    verdict(6, "NPCA BSS1 improves both BSSs", ok, "; ".join(rows))


def test_c07_delay_reduction(two_bss, verdict):
    leg, npc = _by(two_bss, "legacy", 0), _by(two_bss, "npca", 0)
    frac = npc[-1].delay_mean_us / leg[-1].delay_mean_us
    mono = {}
    for v in ("legacy", "npca"):
        for b in (0, 1):
            pts = _by(two_bss, v, b)
            mono[f"{v}:bss{b + 1}"] = monotone([p.delay_mean_us for p in pts], [p.delay_std_us for p in pts], increasing=True)
    ok = frac <= 0.6 and all(mono.values())
    detail = f"BSS1 delay at n=10: npca {npc[-1].delay_mean_us:.0f} us vs legacy {leg[-1].delay_mean_us:.0f} us ({frac:.0%})"
    detail += "; monotone " + " ".join(f"{k}={v}" for k, v in mono.items())
    verdict(7, "delay reduction and growth with n", ok, detail)


def test_c08_obss_calibration(occupancy, two_bss, verdict):
    worst = 0.0
    for res in (occupancy, two_bss):
        for p in res.points:
            world = res.spec.world(p.value, next(v for v in res.spec.variants if v.label == p.variant))
            for sample in p.idle_fraction_samples:
                for target, measured in zip(world.channels.idle_probs, sample):
                    worst = max(worst, abs(measured - target))
    verdict(8, "sensed-idle fraction within 1% of target", worst <= 0.01, f"max deviation {worst:.4f} over all 30 s runs")


def test_c09_determinism(tmp_path, verdict):
    spec = preset_single_bss_occupancy().replace(duration_us=200_000, seeds=(1, 2))
    paths = [
        emit_csv(run_scenario(spec), tmp_path / "a.csv"),
        emit_csv(run_scenario(spec), tmp_path / "b.csv"),
        emit_csv(run_scenario(spec, parallelism=4), tmp_path / "c.csv"),
    ]
    blobs = [open(p, "rb").read() for p in paths]
    ok = blobs[0] == blobs[1] == blobs[2]
    verdict(9, "byte-identical reruns and parallelism", ok, f"{len(blobs[0])} bytes, identical={ok}")


def test_c10_access_delay_formula(verdict):
    worst = 0.0
    for w in (8, 16, 32):
        for payload in (500, 1500):
            for n in (1, 2, 3, 5, 10, 20, 35, 50):
                cfg = CFG.replace(cw_min=w, cw_max=1024, payload_bytes=payload)
                m = cfg.max_backoff_stage
                got = analytic.access_delay(n, cfg).expected_access_delay_us
                ref = oracles.access_delay(n, w=w, m=m, bits=payload * 8)
                worst = max(worst, abs(got - ref) / ref)
    d = [analytic.access_delay(n, CFG).expected_access_delay_us for n in range(1, 51)]
    increasing = bool(np.all(np.diff(d) > 0))
    verdict(10, "access-delay formula vs oracle", worst <= 1e-12 and increasing,
            f"max relative error {worst:.2e}; increasing over n=1..50: {increasing}")
