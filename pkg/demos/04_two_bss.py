"""
A 40 MHz and a 20 MHz BSS side by side
======================================

BSS1 bonds two channels, BSS2 has only the shared primary. Turning BSS1 into
an NPCA network lets it leave the primary while BSS2 talks, which helps both.
"""

# %%
from npca_sim.report import Tolerances, summary_text, validate
from npca_sim.scenarios import preset_delay_analysis, preset_two_bss, run_scenario

base = run_scenario(preset_two_bss("legacy").replace(duration_us=3e6, seeds=(1, 2)))
for p1, p2 in zip(base.select(bss_index=0), base.select(bss_index=1)):
    print(f"n={p1.value:>4g}  BSS1 {p1.throughput_mean:6.2f}  BSS2 {p2.throughput_mean:6.2f}  "
          f"ratio {p1.throughput_mean / p2.throughput_mean:.2f}  (model {p1.analytic_s_leg:.2f} / {p2.analytic_s_leg:.2f})")

# %%
# All-legacy points have a model reference; check them at 10%.
verdicts, status = validate(base, Tolerances(throughput=0.10))
print(summary_text(verdicts, status))

# %%
# Delay view: both policies for BSS1 in one scenario.
res = run_scenario(preset_delay_analysis().replace(duration_us=3e6, seeds=(1, 2)))
for v in ("legacy", "npca"):
    print(v, [round(p.delay_mean_us) for p in res.select(variant=v, bss_index=0)], "us (BSS1)")
print("model E[D]:", [round(p.analytic_delay_us) for p in res.select(variant="legacy", bss_index=0)])
