"""
One simulation run
==================

Ten stations on a two-channel BSS with an external network holding the
primary 70% of the time, first as legacy devices, then with NPCA.
"""

# %%
from npca_sim import analytic
from npca_sim.params import ChannelSetup
from npca_sim.simcore import BssConfig, WorldConfig, run_simulation

channels = ChannelSetup(primary_idle_prob=0.3, nonprimary_idle_probs=(0.8,))

for policy in ("legacy", "npca"):
    world = WorldConfig(channels=channels, bss=(BssConfig(channels=(0, 1), n_stations=10, policy=policy),))
    rep = run_simulation(world, duration_us=5e6, seed=1)
    d = rep.delay_summary(0)
    print(f"{policy:>6}: {rep.per_bss_throughput_mbps[0]:6.2f} Mbps, "
          f"delay mean {d['mean']:7.1f} us p95 {d['p95']:7.1f} us, collision rate {rep.collision_rate:.3f}")
    print("        packets per channel:", rep.per_bss_channel_packets[0],
          " sensed idle:", [round(x, 3) for x in rep.measured_idle_fraction])

# %%
# On a clean channel the simulator should sit close to the fixed-point model.
world = WorldConfig(bss=(BssConfig(n_stations=10),))
rep = run_simulation(world, 5e6, seed=2)
print(f"sim {rep.per_bss_throughput_mbps[0]:.2f} Mbps vs model "
      f"{analytic.single_channel_throughput(10, world.phy):.2f} Mbps")

# %%
# Every attempt can be kept for inspection.
rep = run_simulation(WorldConfig(channels=channels, bss=(BssConfig((0, 1), 3, "npca"),)), 20_000, seed=3,
                     record_attempts=True)
for a in rep.attempts[:8]:
    print(a)
