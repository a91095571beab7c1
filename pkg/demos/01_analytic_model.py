"""
Closed-form throughput and delay
================================

Saturation throughput of one 20 MHz channel, what bonding and NPCA switching
add on top of it, and the expected access delay.
"""

# %%
import numpy as np

from npca_sim import analytic
from npca_sim.params import ChannelSetup, PhyMacConfig

cfg = PhyMacConfig()  # MCS7, 1500-byte payload, CW 16..1024
print(f"DIFS {cfg.difs_us} us, max backoff stage {cfg.max_backoff_stage}")

# %%
# The fixed point: per-slot transmit probability tau and collision
# probability p for a growing number of stations.
for n in (1, 5, 10, 20, 50):
    sol = analytic.solve_bianchi(n, cfg)
    s = analytic.single_channel_throughput(n, cfg)
    print(f"n={n:>2}  tau={sol.tau:.4f}  p={sol.p_cond:.4f}  S={s:6.2f} Mbps")

# %%
# Two channels, busy primary. Legacy bonds the second channel only behind an
# idle primary; NPCA also moves to it when the primary is taken.
ch = ChannelSetup(primary_idle_prob=0.5, nonprimary_idle_probs=(0.8,))
bd = analytic.npca_throughput(10, cfg, ch)
print(f"S={bd.s_single:.2f}  S_leg={bd.s_legacy:.2f}  S_npca={bd.s_npca:.2f} Mbps")
print("per channel (primary first):", np.round(bd.per_channel_npca, 2))

# %%
# The NPCA advantage shrinks as the primary gets quieter and vanishes at P_r = 1.
for pr in (0.1, 0.3, 0.5, 0.7, 0.9, 1.0):
    m = analytic.npca_throughput(10, cfg, ChannelSetup(pr, (0.8,)), s=1.0)
    print(f"P_r={pr:.1f}  legacy x{m.s_legacy:.2f}  npca x{m.s_npca:.2f}")

# %%
# Expected access delay grows with contention.
for n in (1, 2, 5, 10, 20):
    d = analytic.access_delay(n, cfg)
    print(f"n={n:>2}  E[D]={d.expected_access_delay_us:8.1f} us")
