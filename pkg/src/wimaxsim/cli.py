"""Command-line interface: simulate, sweep, and replay subcommands.

Exit codes: 0 on success, 1 on configuration errors, 2 when a replayed trace
diverges from its golden timeline.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import engine, metrics, sweep
from .config import ConfigError, _parse_value, load_config
from .perception import PolicyKind, TraceParseError, replay_trace_file


def _parse_sets(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, val = pair.partition("=")
        out[key.strip()] = val.strip()
    return out


def _load(args) -> "ScenarioConfig":
    overrides = _parse_sets(args.set or [])
    if args.seed:
        overrides["seeds"] = args.seed
    cfg = load_config(args.config, overrides)
    if cfg.preset == "replay":
        raise ConfigError("preset: 'replay' runs through the replay subcommand")
    return cfg


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    reports = []
    for seed in cfg.seeds:
        report = engine.run(cfg, seed, collect_log=args.log is not None)
        if args.log is not None:
            suffix = f".seed{seed}" if len(cfg.seeds) > 1 else ""
            with open(args.log + suffix, "w", encoding="utf-8") as fh:
                fh.write("\n".join(report.event_log) + "\n")
        reports.append(report)
    _emit_csv(reports, args.out)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    key, _, raw_values = args.axis.partition("=")
    key = key.strip()
    if not raw_values:
        raise ConfigError("--axis expects key=v1,v2,...")
    values = [_parse_value(key, v) for v in raw_values.split(",") if v.strip()]
    policies = [PolicyKind.from_name(p).value for p in args.policies.split(",") if p.strip()]
    if not policies:
        raise ConfigError("--policies expects at least one policy")
    jobs = args.jobs or os.cpu_count() or 1
    reports = sweep.run_sweep(cfg, (key, values), policies, jobs=jobs)
    _emit_csv(reports, args.out)
    if args.out and not args.no_figures:
        from . import plotting
        per_run_values = [v for v in values for _ in policies for _ in cfg.seeds]
        stem, _ = os.path.splitext(args.out)
        path = plotting.render_sweep_figure(reports, key, stem + "_trends.png",
                                            axis_values=per_run_values)
        print(f"figure written to {path}", file=sys.stderr)
    return 0


def _cmd_replay(args) -> int:
    policy = PolicyKind.from_name(args.policy)
    try:
        result = replay_trace_file(args.trace, policy)
    except OSError as exc:
        raise ConfigError(f"trace: cannot read {args.trace!r}: {exc}") from exc
    lines = result.to_lines()
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.golden:
        with open(args.golden, "r", encoding="utf-8") as fh:
            golden = [ln.rstrip("\n") for ln in fh if ln.strip()]
        for i, (got, want) in enumerate(zip(lines, golden)):
            if got != want:
                print(f"golden mismatch at event {i}:\n  got:      {got}\n"
                      f"  expected: {want}", file=sys.stderr)
                return 2
        if len(lines) != len(golden):
            print(f"golden mismatch: {len(lines)} events vs {len(golden)} expected",
                  file=sys.stderr)
            return 2
        print("golden trace: PASS", file=sys.stderr)
    return 0


def _emit_csv(reports, out_path) -> None:
    if out_path:
        metrics.write_csv(reports, out_path)
    else:
        metrics.write_csv(reports, sys.stdout)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wimaxsim",
        description="802.16 uplink request-grant simulator with pluggable "
                    "bandwidth-perception policies")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario over its seed list")
    sim.add_argument("--config", help="scenario file (key = value lines)")
    sim.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    sim.add_argument("--seed", help="comma-separated seed list override")
    sim.add_argument("--out", help="CSV output path (default: stdout)")
    sim.add_argument("--log", help="write per-run event logs to this path")
    sim.set_defaults(func=_cmd_simulate)

    swp = sub.add_parser("sweep", help="run a grid over an axis and policies")
    swp.add_argument("--config", help="base scenario file")
    swp.add_argument("--set", action="append", metavar="KEY=VALUE")
    swp.add_argument("--seed", help="comma-separated seed list override")
    swp.add_argument("--axis", required=True, metavar="KEY=V1,V2,...")
    swp.add_argument("--policies", required=True, metavar="P1,P2,...")
    swp.add_argument("--jobs", type=int, default=0,
                     help="parallel worker processes (default: cpu count)")
    swp.add_argument("--out", help="CSV output path (default: stdout)")
    swp.add_argument("--no-figures", action="store_true",
                     help="skip rendering the trend figure next to the CSV")
    swp.set_defaults(func=_cmd_sweep)

    rep = sub.add_parser("replay", help="replay a perception trace script")
    rep.add_argument("--trace", required=True, help="trace script path")
    rep.add_argument("--policy", required=True, help="policy to replay under")
    rep.add_argument("--golden", help="golden timeline to compare against")
    rep.add_argument("--out", help="write the timeline here instead of stdout")
    rep.set_defaults(func=_cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TraceParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except sweep.SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
