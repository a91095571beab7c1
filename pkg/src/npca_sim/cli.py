"""Command-line entry point: ``npca-sim <subcommand> [options]``.

Exit codes: 0 success, 1 validation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__, analytic
from .config import (
    apply_overrides,
    config_hash,
    default_document,
    dump,
    dumps,
    load,
    world_from_document,
)
from .params import ConfigError
from .report import Tolerances, point_rows, summary_text, validate, write_csv_header, write_csv_rows
from .scenarios import FIGURE_TAGS, ScenarioError, ScenarioSpec, get_preset, run_scenario
from .simcore import POLICIES, run_simulation

PROG = "npca-sim"
SEED_ENV = "NPCA_SIM_SEED"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def parse_seeds(text: str) -> tuple[int, ...]:
    """``"1,2,5"`` or ``"1-5"`` (inclusive) or a mix of both."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        lo, sep, hi = part.partition("-")
        try:
            if sep:
                a, b = int(lo), int(hi)
                if b < a:
                    raise ValueError
                out.extend(range(a, b + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise UsageError(f"bad seed list {text!r}") from None
    if not out or any(s < 0 for s in out):
        raise UsageError(f"bad seed list {text!r}")
    return tuple(out)


def _env_seed() -> int | None:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _document(args) -> dict:
    doc = load(args.config) if args.config else default_document()
    return apply_overrides(doc, args.set or [])


def _write_manifest(out_dir: Path, args, doc: dict, **extra) -> Path:
    """Resolved config plus provenance; rerunning from it reproduces the outputs."""
    doc = {k: v for k, v in doc.items() if k != "meta"}
    doc["meta"] = {
        "tool": PROG,
        "version": __version__,
        "command": args.command,
        "config_hash": config_hash(doc),
        **extra,
    }
    path = out_dir / "manifest.toml"
    dump(doc, path)
    return path


# -- subcommands -----------------------------------------------------------


def cmd_analytic(args) -> int:
    doc = _document(args)
    world, _, _ = world_from_document(doc)
    n = world.bss[0].n_stations
    cfg, ch = world.phy, world.channels
    bd = analytic.npca_throughput(n, cfg, ch)
    norm = analytic.npca_throughput(n, cfg, ch, s=1.0)
    dly = analytic.access_delay(n, cfg)
    sol = analytic.solve_bianchi(n, cfg)
    rows = [
        ("n_stations", n),
        ("primary_idle_prob", ch.primary_idle_prob),
        ("nonprimary_idle_probs", " ".join(f"{p:g}" for p in ch.nonprimary_idle_probs) or "-"),
        ("tau", sol.tau),
        ("p_collision", sol.p_cond),
        ("S_mbps", bd.s_single),
        ("S_leg_mbps", bd.s_legacy),
        ("S_npca_mbps", bd.s_npca),
        ("S_leg_over_S", norm.s_legacy),
        ("S_npca_over_S", norm.s_npca),
    ]
    rows += [(f"S_npca_ch{c}_mbps", v) for c, v in enumerate(bd.per_channel_npca)]
    rows.append(("access_delay_us", dly.expected_access_delay_us))
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"{k:<{width}}  {v:.6f}" if isinstance(v, float) else f"{k:<{width}}  {v}")
    if args.csv:
        try:
            with open(args.csv, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["quantity", "value"])
                for k, v in rows:
                    w.writerow([k, f"{v:.6f}" if isinstance(v, float) else v])
        except OSError as exc:
            raise ConfigError(f"cannot write {args.csv}: {exc}") from None
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = _document(args)
    if args.duration_s is not None:
        doc["sim"]["duration_s"] = float(args.duration_s)
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is not None:
        doc["sim"]["seed"] = seed
    world, duration_s, seed = world_from_document(doc)
    rep = run_simulation(world, duration_s * 1e6, seed)
    print(f"duration_s={duration_s:g} seed={seed} stations={world.n_stations}")
    for b, bss in enumerate(world.bss):
        d = rep.delay_summary(b)
        print(
            f"bss{b + 1} policy={bss.policy} n={bss.n_stations} throughput_mbps={rep.per_bss_throughput_mbps[b]:.4f} "
            f"delay_mean_us={d['mean']:.2f} delay_p95_us={d['p95']:.2f} "
            f"successes={rep.per_bss_successes[b]} collisions={rep.per_bss_collisions[b]}"
        )
    for c, (u, idle) in enumerate(zip(rep.per_channel_utilization, rep.measured_idle_fraction)):
        parts = " ".join(f"{k}={v:.4f}" for k, v in u.items())
        print(f"ch{c} {parts} sensed_idle={idle:.4f}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(rep.to_json() + "\n")
        _write_manifest(out, args, doc)
    return EXIT_OK


def _scenario(args) -> tuple[ScenarioSpec, str]:
    if (args.target is None) == (args.config is None):
        raise UsageError("give exactly one of TARGET or --config")
    target = args.target or args.config
    if args.config or target.endswith(".toml") or os.sep in target or Path(target).is_file():
        doc = apply_overrides(load(target), args.set or [])
        spec = ScenarioSpec.from_document(doc)
        stem = str(doc.get("meta", {}).get("output_stem", spec.name))
    else:
        spec = get_preset(target, args.policy)
        if args.set:
            spec = ScenarioSpec.from_document(apply_overrides(spec.to_document(), args.set))
        stem = f"{FIGURE_TAGS[target.replace('_', '-')]}_{spec.name}"
    if args.seeds:
        spec = spec.replace(seeds=parse_seeds(args.seeds))
    elif args.seed is not None:
        spec = spec.replace(seeds=(args.seed,))
    if args.duration_s is not None:
        spec = spec.replace(duration_us=float(args.duration_s) * 1e6)
    return spec, stem


def _run_sweep(args):
    spec, stem = _scenario(args)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    csv_path = Path(args.csv) if args.csv else out / f"{stem}.csv"
    _write_manifest(out, args, spec.to_document(), output_stem=stem)
    try:
        fh = open(csv_path, "w", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write {csv_path}: {exc}") from None
    with fh:
        write_csv_header(fh)
        fh.flush()

        def flush(rows):
            write_csv_rows(fh, point_rows(rows))
            fh.flush()

        result = run_scenario(spec, parallelism=args.parallelism, on_point=flush)
    print(f"wrote {csv_path}")
    return result


def cmd_sweep(args) -> int:
    result = _run_sweep(args)
    for pt in result.points:
        print(
            f"{pt.sweep_param}={pt.value:g} {pt.policy_label:<14} throughput={pt.throughput_mean:.4f}"
            f"±{pt.throughput_std:.4f} delay_us={pt.delay_mean_us:.2f}±{pt.delay_std_us:.2f}"
        )
    return EXIT_OK


def cmd_validate(args) -> int:
    result = _run_sweep(args)
    verdicts, status = validate(result, Tolerances(throughput=args.tolerance))
    sys.stdout.write(summary_text(verdicts, status))
    return EXIT_OK if status == 0 else EXIT_FAIL


def cmd_preset(args) -> int:
    spec = get_preset(args.name, args.policy)
    text = dumps(spec.to_document())
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, *, config: bool = True) -> None:
    if config:
        p.add_argument("--config", metavar="PATH", help="TOML config file (default: built-in defaults)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. phy.slot_us=9 (repeatable)")


def _run_opts(p: argparse.ArgumentParser, seed_help: str) -> None:
    p.add_argument("--seed", type=int, help=seed_help)
    p.add_argument("--duration-s", type=float, metavar="S", help="simulated seconds per run")
    p.add_argument("--out", metavar="DIR", help="output directory (manifest and results)")


def _sweep_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("target", nargs="?", help="preset name (single-bss-occupancy, two-bss, delay-analysis) or scenario TOML path")
    p.add_argument("--policy", choices=POLICIES, help="BSS1 policy for the two-bss preset")
    p.add_argument("--config", metavar="PATH", help="scenario TOML (same as giving its path as TARGET)")
    _common(p, config=False)
    _run_opts(p, "run every point with this one seed instead of the scenario's seed list")
    p.add_argument("--seeds", metavar="LIST", help="seed list, e.g. 1,2,3 or 1-5")
    p.add_argument("--csv", metavar="PATH", help="CSV path (default: OUT/<fig>_<preset>.csv)")
    p.add_argument("--parallelism", type=int, default=1, metavar="N", help="worker processes (output is identical for any N)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Legacy vs NPCA multi-channel access: model and simulator.")
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("analytic", help="model throughput and access delay for a config")
    _common(p)
    p.add_argument("--csv", metavar="PATH", help="also write the table as CSV")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="run one simulation")
    _common(p)
    _run_opts(p, f"master seed (fallback: ${SEED_ENV}, then the config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a preset or scenario sweep and write CSV")
    _sweep_opts(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run a sweep and check it against the model")
    _sweep_opts(p)
    p.add_argument("--tolerance", type=float, default=Tolerances().throughput, help="relative throughput tolerance (default 0.10)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("preset", help="print a preset as an editable scenario TOML")
    p.add_argument("name", help="single-bss-occupancy, two-bss or delay-analysis")
    p.add_argument("--policy", choices=POLICIES, help="BSS1 policy for the two-bss preset")
    p.add_argument("--out", metavar="PATH", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_preset)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "parallelism", 1) < 1:
        parser.error("--parallelism must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, UsageError, OSError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
