"""Independent reference implementations used by the tests.

Written from the model definitions without reusing package code, so a shared
mistake would have to be made twice.
"""

import itertools
import math

from scipy.optimize import brentq


def tau_rational(p, w, m):
    # original rational form; undefined exactly at p = 1/2, fine for brentq
    num = 2.0 * (1.0 - 2.0 * p)
    den = (1.0 - 2.0 * p) * (w + 1) + p * w * (1.0 - (2.0 * p) ** m)
    return num / den


def bianchi(n, w=16, m=6):
    if n == 1:
        return 2.0 / (w + 1), 0.0

    def g(p):
        if abs(p - 0.5) < 1e-12:
            p = 0.5 + 1e-12
        return p - (1.0 - (1.0 - tau_rational(p, w, m)) ** (n - 1))

    p = brentq(g, 0.0, 1.0, xtol=1e-300, rtol=1e-15, maxiter=500)
    return tau_rational(p, w, m), p


def timings(slot=9.0, sifs=16.0, header=40.0, ack=32.0, prop=0.1, bits=12000, rate=86.0):
    difs = sifs + 2 * slot
    eifs = sifs + ack + difs
    pkt = bits / rate
    ts = header + pkt + sifs + prop + ack + difs + prop
    tc = header + pkt + prop + eifs
    return ts, tc


def saturation_throughput(n, w=16, m=6, **kw):
    tau, _ = bianchi(n, w, m)
    ts, tc = timings(**kw)
    slot = kw.get("slot", 9.0)
    bits = kw.get("bits", 12000)
    ptr = 1.0 - (1.0 - tau) ** n
    ps = n * tau * (1.0 - tau) ** (n - 1) / ptr
    return ps * ptr * bits / ((1 - ptr) * slot + ptr * ps * ts + ptr * (1 - ps) * tc)


def legacy_multiplier_enumerated(probs):
    """Expected channel count of a legacy transmission over all 2^N patterns."""
    total = 0.0
    for pattern in itertools.product((True, False), repeat=len(probs)):
        weight = math.prod(p if idle else 1 - p for p, idle in zip(probs, pattern))
        used = 1
        for idle in pattern:
            if not idle:
                break
            used += 1
        total += weight * used
    return total


def npca_multiplier_direct(pr, probs):
    """NPCA multiplier summed channel by channel, written out longhand."""
    n = len(probs)

    def bond(start):  # expected channels from index ``start`` (0-based) onward, plus one
        total = 1.0
        for i in range(start, n):
            total += math.prod(probs[start:i + 1])
        return total

    total = bond(0)
    for c in range(n):
        odds = (1 - pr) / pr
        for t in range(c):
            odds *= (1 - probs[t]) / probs[t]
        total += odds * probs[c] * bond(c + 1)
    return total


def access_delay(n, w=16, m=6, slot=9.0, sifs=16.0, ack=32.0, bits=12000, rate=86.0):
    tau, _ = bianchi(n, w, m)
    ptr = 1.0 - (1.0 - tau) ** n
    difs = sifs + 2 * slot
    pkt = bits / rate
    t = pkt + difs
    c = pkt + sifs + ack + difs
    t_star = c_star = c
    return (
        (slot + ptr * c) / (tau * (1 - ptr))
        + (n - 1) * (t_star - c_star) / (1 - tau)
        + ptr * c / (1 - ptr)
        + t
    )
