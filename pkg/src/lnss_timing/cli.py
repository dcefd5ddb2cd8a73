"""Command-line entry point: run, sweep, validate, almanac-info."""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter
from dataclasses import replace
from pathlib import Path

from .gps import YumaParseError, assign_blocks, parse_yuma
from .orbits.catalog import ORBIT_NAMES
from .scenario import CaseError, ConfigError, config_from_dict, load_config, run_case, run_sweep, sweep_csv_text


def _config(args):
    return load_config(args.config) if args.config else config_from_dict({})


def _parse_case(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"--case expects ORBIT:CLOCK:M, got {text!r}")
    try:
        m = int(parts[2])
    except ValueError:
        raise ConfigError(f"--case: M must be an integer, got {parts[2]!r}") from None
    if m < 1:
        raise ConfigError("--case: M must be at least 1")
    if parts[0].upper() not in ORBIT_NAMES:
        raise ConfigError(f"--case: unknown orbit {parts[0]!r}; expected one of {', '.join(ORBIT_NAMES)}")
    return parts[0].upper(), parts[1], m


def cmd_run(args) -> int:
    cfg = _config(args)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    seeds = [args.seed] if args.seed is not None else list(cfg.seeds)
    if args.case:
        orbit, clock, m = _parse_case(args.case)
        try:
            clock = cfg.clock(clock).name
        except ValueError as exc:
            raise ConfigError(f"--case: {exc}") from None
        ids = [(orbit, clock, m, s) for s in seeds]
    else:
        triples = dict.fromkeys((o, c, m) for o, c, m, _ in cfg.case_ids())
        ids = [(o, c, m, s) for o, c, m in triples for s in seeds]
    status = 0
    for ident in ids:
        try:
            res = run_case(cfg, *ident)
        except CaseError as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = 1
            continue
        print(json.dumps({**res.metrics, "seed": res.seed}))
    return status


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.out:
        cfg = replace(cfg, output_dir=args.out)
    results = run_sweep(cfg, workers=args.workers)
    sys.stdout.write(sweep_csv_text(results))
    print(f"wrote {len(results)} rows to {Path(cfg.output_dir) / 'sweep.csv'}", file=sys.stderr)
    return 0 if all(r.ok for r in results) else 1


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"ok: {len(cfg.case_ids())} case(s); orbits {', '.join(o.name for o in cfg.orbits)}; "
          f"clocks {', '.join(cfg.clocks)}; m {list(cfg.m_values)}; seeds {list(cfg.seeds)}; "
          f"{cfg.duration_days:g} days at {cfg.grid_step:g} s; output {cfg.output_dir}")
    return 0


def cmd_almanac_info(args) -> int:
    records = parse_yuma(Path(args.file).read_text())
    healthy = [r for r in records if r.healthy]
    print(f"records: {len(records)} ({len(healthy)} healthy)")
    if records:
        a = [r.semi_major_axis_km for r in records]
        e = [r.e for r in records]
        print(f"PRNs: {', '.join(str(r.prn) for r in records)}")
        print(f"semi-major axis: {min(a):.1f} .. {max(a):.1f} km; eccentricity: {min(e):.4f} .. {max(e):.4f}")
        weeks = sorted({r.week for r in records})
        print(f"week(s): {', '.join(map(str, weeks))}")
    if healthy:
        hist = Counter(s.block for s in assign_blocks(healthy))
        print("blocks: " + ", ".join(f"{b}={hist.get(b, 0)}" for b in ("IIR", "IIRM", "IIF", "III")))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lnss-timing", description="Earth-GPS time transfer for lunar orbiters")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one case (or every case in the config)")
    r.add_argument("--config", help="JSON scenario file (defaults when omitted)")
    r.add_argument("--case", help="ORBIT:CLOCK:M, e.g. ELFO:CSAC:1")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output directory")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run the orbit x clock x m x seed matrix")
    s.add_argument("--config", help="JSON scenario file")
    s.add_argument("--out", help="output directory")
    s.add_argument("--workers", type=int, default=None, help="parallel cases (default from config)")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="check a scenario file")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_validate)

    a = sub.add_parser("almanac-info", help="summarise a YUMA almanac")
    a.add_argument("file")
    a.set_defaults(func=cmd_almanac_info)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, YumaParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
