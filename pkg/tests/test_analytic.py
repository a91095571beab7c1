import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npca_sim import analytic
from npca_sim.params import ChannelSetup, PhyMacConfig

import oracles

CFG = PhyMacConfig()

# Frozen from the independent oracle (brentq on the rational form).
TAU_P = {
    5: (0.0761489022346879, 0.271536297611688),
    10: (0.0524798944411539, 0.384403833301086),
    20: (0.0339169978001858, 0.480872090442198),
}
THROUGHPUT = {1: 36.448142628080596, 5: 36.31878064522339, 10: 33.91517302169232, 20: 31.309104254881706}
DELAY = {1: 540.8457364341086, 10: 3641.590127269938}

probs_strategy = st.floats(0.05, 0.99)


@pytest.mark.parametrize("n", sorted(TAU_P))
def test_fixed_point_frozen(n):
    sol = analytic.solve_bianchi(n, CFG)
    assert sol.tau == pytest.approx(TAU_P[n][0], rel=1e-12)
    assert sol.p_cond == pytest.approx(TAU_P[n][1], rel=1e-12)
    assert sol.residual <= analytic.RESIDUAL_TOL


def test_fixed_point_hand_case():
    # W=2, m=0: tau = 2/3 = p for two stations
    sol = analytic.solve_bianchi(2, CFG.replace(cw_min=2, cw_max=2))
    assert sol.tau == pytest.approx(2 / 3, rel=1e-12)
    assert sol.p_cond == pytest.approx(2 / 3, rel=1e-12)


def test_single_station():
    sol = analytic.solve_bianchi(1, CFG)
    assert sol.p_cond == 0.0 and sol.tau == pytest.approx(2 / 17)


@pytest.mark.parametrize("n", sorted(THROUGHPUT))
def test_throughput_frozen(n):
    assert analytic.single_channel_throughput(n, CFG) == pytest.approx(THROUGHPUT[n], rel=1e-12)


def test_single_station_renewal():
    # one station: mean backoff (W-1)/2 slots, then one success
    ts = oracles.timings()[0]
    assert analytic.single_channel_throughput(1, CFG) == pytest.approx(12000 / (7.5 * 9 + ts), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 60), w=st.sampled_from([4, 8, 16, 32, 64]), m=st.integers(0, 7))
def test_fixed_point_matches_oracle(n, w, m):
    cfg = CFG.replace(cw_min=w, cw_max=w << m)
    sol = analytic.solve_bianchi(n, cfg)
    tau, p = oracles.bianchi(n, w, m)
    assert sol.tau == pytest.approx(tau, rel=1e-9)
    assert sol.p_cond == pytest.approx(p, rel=1e-9)
    assert 0 < sol.tau < 1 and 0 < sol.p_cond < 1


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 40), payload=st.sampled_from([200, 500, 1500, 3000]), rate=st.sampled_from([8.6, 86.0, 143.4]))
def test_throughput_matches_oracle(n, payload, rate):
    cfg = CFG.replace(payload_bytes=payload, data_rate_mbps=rate)
    ref = oracles.saturation_throughput(n, bits=payload * 8, rate=rate)
    assert analytic.single_channel_throughput(n, cfg) == pytest.approx(ref, rel=1e-9)


def test_throughput_below_rate_and_normalized():
    for n in (1, 5, 50):
        x = analytic.normalized_throughput(n, CFG)
        assert 0 < x < 1


def test_tau_of_p_no_singularity():
    a = analytic.tau_of_p(0.5, 16, 6)
    b = analytic.tau_of_p(0.5 + 1e-9, 16, 6)
    assert math.isfinite(a) and a == pytest.approx(b, rel=1e-6)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        analytic.solve_bianchi(0, CFG)
    with pytest.raises(ValueError):
        analytic.p_success(0.0, 5)
    with pytest.raises(ValueError):
        analytic.p_transmit(1.5, 5)


def test_f_coeff():
    assert analytic.f_coeff(1, []) == 1.0
    assert analytic.f_coeff(1, [0.8]) == pytest.approx(1.8)
    assert analytic.f_coeff(2, [0.8]) == 1.0
    assert analytic.f_coeff(1, [0.5, 0.5]) == pytest.approx(1.75)
    with pytest.raises(ValueError):
        analytic.f_coeff(4, [0.5, 0.5])


def test_no_nonprimary_channels_collapses():
    bd = analytic.npca_throughput(10, CFG, ChannelSetup(0.4, ()))
    assert bd.s_single == bd.s_legacy == bd.s_npca


def test_worked_example_ratios():
    bd = analytic.npca_throughput(10, CFG, ChannelSetup(0.5, (0.8,)), s=1.0)
    assert bd.s_legacy == pytest.approx(1.8)
    assert bd.s_npca == pytest.approx(2.6)
    assert bd.per_channel_npca == pytest.approx((1.8, 0.8))


def test_clean_primary_gives_no_npca_gain():
    bd = analytic.npca_throughput(10, CFG, ChannelSetup(1.0, (0.3, 0.9)))
    assert bd.s_npca == pytest.approx(bd.s_legacy)


@settings(max_examples=200, deadline=None)
@given(st.lists(probs_strategy, min_size=0, max_size=5))
def test_legacy_outcomes_telescope(probs):
    s = 7.0
    terms = analytic.legacy_outcome_terms(s, probs)
    assert len(terms) == len(probs) + 1
    closed = analytic.legacy_from_single(s, ChannelSetup(1.0, probs))
    assert math.fsum(terms) == pytest.approx(closed, rel=1e-12)
    assert closed == pytest.approx(s * oracles.legacy_multiplier_enumerated(probs), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(probs_strategy, st.lists(probs_strategy, min_size=1, max_size=4))
def test_cascade_matches_longhand_oracle(pr, probs):
    bd = analytic.npca_throughput(5, CFG, ChannelSetup(pr, probs), s=1.0)
    assert bd.s_npca == pytest.approx(oracles.npca_multiplier_direct(pr, probs), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(probs_strategy, st.lists(probs_strategy, min_size=1, max_size=3))
def test_npca_strictly_dominates(pr, probs):
    bd = analytic.npca_throughput(10, CFG, ChannelSetup(pr, probs))
    assert bd.s_npca > bd.s_legacy


@settings(max_examples=100, deadline=None)
@given(st.lists(probs_strategy, min_size=1, max_size=4), st.integers(0, 3), st.floats(0.001, 0.2))
def test_legacy_monotone_in_idle_probs(probs, k, bump):
    k = k % len(probs)
    higher = list(probs)
    higher[k] = min(1.0, higher[k] + bump)
    a = analytic.legacy_from_single(1.0, ChannelSetup(1.0, probs))
    b = analytic.legacy_from_single(1.0, ChannelSetup(1.0, higher))
    assert b >= a
    assert 1.0 <= a <= len(probs) + 1


def test_literal_closed_form_is_diagnostic_only():
    ch = ChannelSetup(0.5, (0.8, 0.6))
    bd = analytic.npca_throughput(10, CFG, ch, literal_closed_form=True)
    assert bd.s_npca_closed_form is not None
    assert analytic.npca_throughput(10, CFG, ch).s_npca_closed_form is None
    # the literal form squares the idle factor of the switched-to channel
    one = analytic.npca_throughput(10, CFG, ChannelSetup(0.5, (0.8,)), literal_closed_form=True, s=1.0)
    assert one.s_npca_closed_form == pytest.approx(1.8 + 0.8 * 0.8)
    assert one.s_npca == pytest.approx(1.8 + 0.8)


@pytest.mark.parametrize("n", sorted(DELAY))
def test_access_delay_frozen(n):
    assert analytic.access_delay(n, CFG).expected_access_delay_us == pytest.approx(DELAY[n], rel=1e-12)


def test_access_delay_components():
    est = analytic.access_delay(10, CFG)
    assert est.components[1] == 0.0
    assert math.fsum(est.components) == pytest.approx(est.expected_access_delay_us)
    assert est.assumes_large_cw_max


def test_access_delay_increasing_in_n():
    d = [analytic.access_delay(n, CFG).expected_access_delay_us for n in range(1, 51)]
    assert np.all(np.diff(d) > 0)
