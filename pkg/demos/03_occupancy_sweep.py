"""
Busy primary, idle second channel
=================================

The single-BSS occupancy experiment, shortened to a few simulated seconds so
it finishes quickly. Use the CLI (``npca-sim sweep single-bss-occupancy``)
for the full 30 s x 5 seed version.
"""

# %%
import numpy as np

from npca_sim.report import emit_csv, read_csv
from npca_sim.scenarios import preset_single_bss_occupancy, run_scenario

spec = preset_single_bss_occupancy().replace(duration_us=3e6, seeds=(1, 2))
print(spec.name, spec.sweep_param, spec.sweep_values)
res = run_scenario(spec)

# %%
leg = {p.value: p for p in res.select(variant="legacy")}
npc = {p.value: p for p in res.select(variant="npca")}
for v in spec.sweep_values:
    ratio = npc[v].throughput_mean / leg[v].throughput_mean
    print(f"P_ch1={v:.1f}  legacy {leg[v].throughput_mean:6.2f}  npca {npc[v].throughput_mean:6.2f} Mbps  x{ratio:.2f}")

# %%
# Plot data goes to CSV with a fixed header.
path = emit_csv(res, "occupancy_demo.csv")
rows = read_csv(path)
print(len(rows), "rows;", np.round([r["throughput_mean"] for r in rows], 2))
