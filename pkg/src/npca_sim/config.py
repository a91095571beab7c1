"""TOML configuration documents and dotted-key overrides.

A document is a plain dict with the sections ``[phy]``, ``[channels]``,
``[sim]``, ``[[bss]]`` and optionally ``[scenario]`` (with
``[[scenario.variant]]``) and ``[meta]``. Manifests written next to outputs
use the same layout, so any manifest can be fed back in as a config.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from typing import Any, Iterable

import tomli
import tomli_w

from .params import ChannelSetup, ConfigError, PhyMacConfig
from .simcore import BssConfig, WorldConfig

SECTIONS = ("meta", "phy", "channels", "sim", "bss", "scenario")
SIM_KEYS = ("duration_s", "seed", "obss_burst_us", "switch_delay_us")
AUTO = "auto"


def default_document() -> dict:
    """Single BSS of 10 stations on one clean channel, 30 s, seed 1."""
    return world_to_document(WorldConfig(), duration_s=30.0, seed=1)


def world_to_document(world: WorldConfig, duration_s: float, seed: int) -> dict:
    return {
        "phy": world.phy.to_dict(),
        "channels": world.channels.to_dict(),
        "sim": {
            "duration_s": float(duration_s),
            "seed": int(seed),
            "obss_burst_us": AUTO if world.obss_burst_us is None else float(world.obss_burst_us),
            "switch_delay_us": float(world.switch_delay_us),
        },
        "bss": [b.to_dict() for b in world.bss],
    }


def _check_keys(section: str, data: dict, allowed: Iterable[str]) -> None:
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {section} keys: {sorted(unknown)}")


def world_from_document(doc: dict) -> tuple[WorldConfig, float, int]:
    """Build the simulated world; returns ``(world, duration_s, seed)``."""
    _check_keys("top-level", doc, SECTIONS)
    sim = doc.get("sim", {})
    _check_keys("sim", sim, SIM_KEYS)
    burst = sim.get("obss_burst_us", AUTO)
    if burst == AUTO:
        burst = None
    elif isinstance(burst, str):
        raise ConfigError(f"sim.obss_burst_us must be a number or {AUTO!r}, got {burst!r}")
    bss_list = []
    for i, b in enumerate(doc.get("bss", [{}])):
        _check_keys(f"bss[{i}]", b, ("channels", "n_stations", "policy"))
        try:
            bss_list.append(BssConfig(**b))
        except TypeError as exc:
            raise ConfigError(f"bss[{i}]: {exc}") from None
    try:
        world = WorldConfig(
            phy=PhyMacConfig.from_dict(doc.get("phy", {})),
            channels=ChannelSetup.from_dict(doc.get("channels", {})),
            bss=tuple(bss_list),
            obss_burst_us=burst,
            switch_delay_us=float(sim.get("switch_delay_us", 0.0)),
        )
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    duration_s = float(sim.get("duration_s", 30.0))
    if duration_s < 0:
        raise ConfigError("sim.duration_s must be >= 0")
    seed = sim.get("seed", 1)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"sim.seed must be a non-negative integer, got {seed!r}")
    return world, duration_s, seed


def load(path: str | os.PathLike) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {os.fspath(path)}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {os.fspath(path)}: {exc}") from None


def dumps(doc: dict) -> str:
    return tomli_w.dumps(doc)


def dump(doc: dict, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(doc))


def config_hash(obj: Any) -> str:
    """Short sha256 of the canonical JSON form of ``obj``."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def parse_value(raw: str) -> Any:
    """Read an override value as a TOML literal, falling back to a bare string."""
    try:
        return tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        return raw


def _resolve(node: Any, parts: list[str], value: Any, key: str) -> None:
    head, rest = parts[0], parts[1:]
    if isinstance(node, list):
        if head == "*":
            targets = range(len(node))
        else:
            try:
                targets = [int(head)]
            except ValueError:
                raise ConfigError(f"override {key!r}: expected a list index, got {head!r}") from None
            if not 0 <= targets[0] < len(node):
                raise ConfigError(f"override {key!r}: index {head} out of range")
        for i in targets:
            if rest:
                _resolve(node[i], rest, value, key)
            else:
                node[i] = value
        return
    if not isinstance(node, dict) or head not in node:
        raise ConfigError(f"override {key!r} does not name an existing config key")
    if rest:
        _resolve(node[head], rest, value, key)
    else:
        node[head] = value


def apply_overrides(doc: dict, overrides: Iterable[str]) -> dict:
    """Return a copy of ``doc`` with ``key=value`` overrides applied.

    Keys are dotted paths into existing entries; list elements are addressed
    by index, and ``*`` addresses every element (``bss.*.policy=npca``).
    """
    out = copy.deepcopy(doc)
    for item in overrides:
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        _resolve(out, key.split("."), parse_value(raw.strip()), key)
    return out
