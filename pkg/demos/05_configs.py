"""
Configs, overrides and manifests
================================

Everything the CLI runs can be written as a TOML document, edited, and fed
back in. Manifests written next to outputs use the same format.
"""

# %%
from npca_sim import config
from npca_sim.scenarios import ScenarioSpec, get_preset

doc = get_preset("two-bss", "npca").to_document()
print(config.dumps(doc)[:400])

# %%
# Dotted overrides must name keys that already exist; `*` fans out over lists.
doc = config.apply_overrides(doc, ["phy.payload_bytes=500", "bss.*.n_stations=3", "scenario.seeds=[7]"])
spec = ScenarioSpec.from_document(doc)
print(spec.phy.payload_bytes, [b.n_stations for b in spec.bss_list], spec.seeds)

try:
    config.apply_overrides(doc, ["phy.warp_factor=9"])
except config.ConfigError as exc:
    print("rejected:", exc)

# %%
# The same document format describes a single run.
world, duration_s, seed = config.world_from_document(config.default_document())
print(world.bss, duration_s, seed, config.config_hash(config.default_document()))
