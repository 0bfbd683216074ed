"""Command-line entry point: run scenarios, sweep seeds, compare modes,
replay traces, and serve the driver console gateway.

Exit codes: 0 success, 2 missing scenario file, 3 invalid configuration,
4 malformed trace.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import statistics
import sys

from .engine import TRACE_COLUMNS, run_scenario
from .errors import TraceFormatError, ValidationError
from .metrics import bootstrap_mean_ci, paired_reduction_pct
from .scenario import list_presets, load_scenario, preset, scenario_to_dict

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NO_SCENARIO = 2
EXIT_BAD_CONFIG = 3
EXIT_BAD_TRACE = 4


def _load_config(name: str):
    """Scenario from a preset name or a JSON file path."""
    if name in list_presets():
        return preset(name)
    if not os.path.exists(name):
        raise FileNotFoundError(name)
    return load_scenario(name)


def _parse_seeds(text: str):
    try:
        seeds = [int(s) for s in text.split(",") if s.strip() != ""]
    except ValueError:
        raise ValidationError("seed", f"not an integer list: {text!r}")
    if not seeds:
        raise ValidationError("seed", "no seeds given")
    return seeds


def _aggregate(summaries: list) -> dict:
    """Across-seed mean/stddev for the headline per-run numbers."""
    agg = {}
    for key in ("mean_travel_time", "total_fuel_g", "total_stops", "exited"):
        vals = [s[key] for s in summaries if s.get(key) is not None]
        if not vals:
            continue
        agg[key] = {
            "mean": statistics.fmean(vals),
            "stddev": statistics.stdev(vals) if len(vals) > 1 else 0.0,
        }
    agg["runs"] = len(summaries)
    return agg


def cmd_run(args) -> int:
    cfg = _load_config(args.scenario)
    if args.mode:
        cfg = dataclasses.replace(cfg, mode=args.mode)
    seeds = _parse_seeds(args.seed)
    os.makedirs(args.out, exist_ok=True)
    per_run = []
    for seed in seeds:
        res = run_scenario(cfg, seed)
        trace_path = os.path.join(args.out, f"trace_{cfg.mode}_{seed}.csv")
        res.write_trace(trace_path)
        summary = res.summary_dict()
        with open(os.path.join(args.out, f"summary_{cfg.mode}_{seed}.json"), "w") as f:
            json.dump(summary, f, indent=1)
        per_run.append(summary)
        print(f"seed {seed}: {res.exited}/{res.spawned} vehicles exited, "
              f"trace -> {trace_path}")
    if len(per_run) > 1:
        agg_path = os.path.join(args.out, "aggregate.json")
        with open(agg_path, "w") as f:
            json.dump(_aggregate(per_run), f, indent=1)
        print(f"aggregate -> {agg_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load_config(args.scenario)
    seeds = list(range(args.seeds))
    rows = []
    for seed in seeds:
        ru = run_scenario(dataclasses.replace(cfg, mode="unsignalized"), seed)
        rb = run_scenario(dataclasses.replace(cfg, mode="baseline"), seed)
        du = [s for s in ru.summaries if s.completed]
        db = [s for s in rb.summaries if s.completed]
        if not du or not db:
            logger.warning("seed %d: a mode had no completed vehicles; skipped", seed)
            continue
        rows.append({
            "seed": seed,
            "tt_unsignalized": sum(s.travel_time for s in du) / len(du),
            "tt_baseline": sum(s.travel_time for s in db) / len(db),
            "fuel_unsignalized": sum(s.fuel_g for s in du) / len(du),
            "fuel_baseline": sum(s.fuel_g for s in db) / len(db),
        })
    if not rows:
        print("no comparable runs", file=sys.stderr)
        return EXIT_BAD_CONFIG
    diffs = [r["tt_baseline"] - r["tt_unsignalized"] for r in rows]
    mean_diff, lo, hi = bootstrap_mean_ci(diffs)
    reductions = paired_reduction_pct([r["tt_baseline"] for r in rows],
                                      [r["tt_unsignalized"] for r in rows])
    fuel_better = sum(r["fuel_unsignalized"] < r["fuel_baseline"] for r in rows)
    report = {
        "pairs": rows,
        "travel_time_saved_s": {"mean": mean_diff, "ci95": [lo, hi]},
        "travel_time_reduction_pct": {
            "mean": statistics.fmean(reductions),
            "per_seed": reductions,
        },
        "fuel_lower_in_pairs": f"{fuel_better}/{len(rows)}",
    }
    text = json.dumps(report, indent=1)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "compare.json")
        with open(path, "w") as f:
            f.write(text + "\n")
        print(f"comparison -> {path}")
    print(f"mean travel-time reduction {statistics.fmean(reductions):.1f}% "
          f"(saved {mean_diff:.1f}s, CI95 [{lo:.1f}, {hi:.1f}]); "
          f"fuel lower in {fuel_better}/{len(rows)} pairs")
    return EXIT_OK


def read_trace(path: str):
    """Trace rows as dicts; raises TraceFormatError on any malformed line."""
    rows = []
    with open(path) as f:
        header = f.readline().strip()
        if header and header.split(",") != list(TRACE_COLUMNS):
            raise TraceFormatError(f"unexpected header: {header!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(TRACE_COLUMNS):
                raise TraceFormatError(f"line {lineno}: {len(parts)} fields")
            try:
                rows.append({
                    "t": float(parts[0]),
                    "vehicle_id": int(parts[1]),
                    "intersection_id": parts[2],
                    "r": float(parts[3]),
                    "v": float(parts[4]),
                    "a": float(parts[5]),
                    "slot": int(parts[6]),
                    "d_arrival": float(parts[7]) if parts[7] else None,
                    "fuel_rate": float(parts[8]),
                })
            except ValueError as e:
                raise TraceFormatError(f"line {lineno}: {e}")
    return rows


def trace_series(rows, kind: str) -> dict:
    """Per-vehicle (t, value) series from trace rows.

    distance: cumulative distance traveled, trapezoid-integrated from speed
    (positions in the trace restart at link handoffs); slot: assigned slot
    number steps; speed: raw speed.
    """
    series = {}
    last = {}
    for row in rows:
        vid = row["vehicle_id"]
        pts = series.setdefault(vid, [])
        if kind == "speed":
            pts.append((row["t"], row["v"]))
        elif kind == "slot":
            pts.append((row["t"], row["slot"]))
        elif kind == "distance":
            if vid in last:
                t0, v0, d0 = last[vid]
                d = d0 + 0.5 * (v0 + row["v"]) * (row["t"] - t0)
            else:
                d = 0.0
            last[vid] = (row["t"], row["v"], d)
            pts.append((row["t"], d))
        else:
            raise ValidationError("series", f"unknown series kind {kind!r}")
    return series


def cmd_replay(args) -> int:
    rows = read_trace(args.trace)
    series = trace_series(rows, args.series)
    out = {
        "series": args.series,
        "vehicles": {
            str(vid): [[round(t, 4), round(val, 6) if isinstance(val, float) else val]
                       for t, val in pts]
            for vid, pts in sorted(series.items())
        },
    }
    json.dump(out, sys.stdout, indent=None)
    print()
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .gateway import build_app

    cfg = _load_config(args.scenario)
    app = build_app(cfg, seed=args.seed, camera=args.camera)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="slotsim")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario over one or more seeds")
    run.add_argument("--scenario", required=True,
                     help=f"preset name ({', '.join(list_presets())}) or JSON path")
    run.add_argument("--seed", default="0", help="comma-separated seed list")
    run.add_argument("--mode", choices=["unsignalized", "baseline"])
    run.add_argument("--out", default="out")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="paired unsignalized vs baseline sweep")
    cmp_.add_argument("--scenario", default="compare")
    cmp_.add_argument("--seeds", type=int, default=10, help="number of paired seeds")
    cmp_.add_argument("--out")
    cmp_.set_defaults(func=cmd_compare)

    rep = sub.add_parser("replay", help="turn a trace into per-vehicle series")
    rep.add_argument("--trace", required=True)
    rep.add_argument("--series", choices=["distance", "slot", "speed"],
                     default="distance")
    rep.set_defaults(func=cmd_replay)

    srv = sub.add_parser("serve", help="WebSocket gateway for the driver console")
    srv.add_argument("--scenario", default="corridor")
    srv.add_argument("--seed", type=int, default=0)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8700)
    srv.add_argument("--camera", default=None, help="camera rig JSON path")
    srv.set_defaults(func=cmd_serve)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except FileNotFoundError as e:
        print(f"scenario not found: {e}", file=sys.stderr)
        return EXIT_NO_SCENARIO
    except TraceFormatError as e:
        print(f"malformed trace: {e}", file=sys.stderr)
        return EXIT_BAD_TRACE
    except ValidationError as e:
        print(f"invalid configuration: {e}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except BrokenPipeError:
        # stdout consumer went away (e.g. piped through head); not an error
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
