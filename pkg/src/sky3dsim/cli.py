"""Command-line front end.

    sky3d run --builtin paper --seed 42 --out ./out
    sky3d run --scenario my.yaml --seeds 1..10 --out ./out --no-mobile-aps
    sky3d compare ./out_a ./out_b

Each seed writes <out>/seed<k>/metrics.csv (one row per tick); the run
writes <out>/summary.csv (one row per seed).  Re-running an identical
manifest overwrites with byte-identical files.  The SKY3D_LOG environment
variable (DEBUG/INFO/WARNING/...) controls diagnostics verbosity.
"""

import argparse
import csv
import logging
import os
import sys
from dataclasses import replace

from .engine import EngineInvariantError, MetricsFrame, RunSummary, run
from .scenario import (
    Scenario,
    ScenarioError,
    builtin_paper_scenario,
    parse_scenario,
    strip_mobile_aps,
    validate_scenario,
    with_seed,
    RAT_SATELLITE_TDMA,
)

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVARIANT = 3

BUILTINS = {"paper": builtin_paper_scenario}


def _setup_logging() -> None:
    level = os.environ.get("SKY3D_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def metrics_header(n_aps: int, n_ues: int) -> list[str]:
    cols = ["t_s"]
    for j in range(n_aps):
        cols += [f"ap_{j}_load", f"ap_{j}_connected"]
    cols += [f"ue_{i}_bps" for i in range(n_ues)]
    cols += ["rejections", "drops", "handovers"]
    return cols


def metrics_row(frame: MetricsFrame) -> list:
    row: list = [frame.t_s]
    for load, connected in zip(frame.ap_load, frame.ap_connected):
        row += [load, connected]
    row += list(frame.ue_bps)
    row += [frame.rejections, frame.drops, frame.handovers]
    return row


def summary_header(n_aps: int) -> list[str]:
    cols = [
        "seed", "n_ticks", "rejections", "drops", "handovers",
        "min_connected_bps", "peak_sat_load",
    ]
    for j in range(n_aps):
        cols += [f"ap_{j}_rat", f"ap_{j}_peak_load"]
    return cols


def summary_row(s: RunSummary) -> list:
    sat_peaks = [
        peak for peak, rat in zip(s.ap_peak_load, s.ap_rat)
        if rat == RAT_SATELLITE_TDMA
    ]
    row: list = [
        s.seed, s.n_ticks, s.rejections, s.drops, s.handovers,
        s.min_connected_bps, max(sat_peaks) if sat_peaks else 0.0,
    ]
    for rat, peak in zip(s.ap_rat, s.ap_peak_load):
        row += [rat, peak]
    return row


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _parse_seeds(args) -> list[int]:
    if args.seeds:
        lo, _, hi = args.seeds.partition("..")
        try:
            return list(range(int(lo), int(hi) + 1))
        except ValueError:
            raise SystemExit(
                f"error: --seeds expects <lo>..<hi>, got {args.seeds!r}"
            ) from None
    return [args.seed]


def load_scenario(args) -> Scenario:
    if args.scenario:
        with open(args.scenario, encoding="utf-8") as fh:
            scenario = parse_scenario(fh.read())
    else:
        scenario = BUILTINS[args.builtin]()
    overrides = {}
    if args.strategy:
        overrides["association_strategy"] = args.strategy
    if args.tick_s is not None:
        overrides["tick_s"] = args.tick_s
    if args.duration_s is not None:
        overrides["duration_s"] = args.duration_s
        overrides["arrival_window_s"] = min(
            scenario.arrival_window_s, args.duration_s
        )
    if overrides:
        scenario = validate_scenario(replace(scenario, **overrides))
    if args.no_mobile_aps:
        scenario = strip_mobile_aps(scenario)
    return scenario


def cmd_run(args) -> int:
    try:
        scenario = load_scenario(args)
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_IO
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    seeds = _parse_seeds(args)
    summaries = []
    try:
        for seed in seeds:
            frames, summary = run(with_seed(scenario, seed))
            seed_dir = os.path.join(args.out, f"seed{seed}")
            os.makedirs(seed_dir, exist_ok=True)
            _write_csv(
                os.path.join(seed_dir, "metrics.csv"),
                metrics_header(len(scenario.aps), len(scenario.ues)),
                [metrics_row(f) for f in frames],
            )
            summaries.append(summary)
    except EngineInvariantError as exc:
        print(f"error: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        _write_csv(
            os.path.join(args.out, "summary.csv"),
            summary_header(len(scenario.aps)),
            [summary_row(s) for s in summaries],
        )
    except OSError as exc:
        print(f"error: cannot write summary: {exc}", file=sys.stderr)
        return EXIT_IO

    for s in summaries:
        print(
            f"seed {s.seed}: ticks={s.n_ticks} rejections={s.rejections} "
            f"drops={s.drops} handovers={s.handovers}"
        )
    return EXIT_OK


def _read_summary(out_dir: str) -> list[dict]:
    path = os.path.join(out_dir, "summary.csv")
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _aggregate(rows: list[dict]) -> dict:
    return {
        "rejections": sum(int(r["rejections"]) for r in rows),
        "drops": sum(int(r["drops"]) for r in rows),
        "min_connected_bps": min(
            float(r["min_connected_bps"]) for r in rows
        ),
        "peak_sat_load": max(float(r["peak_sat_load"]) for r in rows),
    }


def cmd_compare(args) -> int:
    try:
        rows_a = _read_summary(args.dir_a)
        rows_b = _read_summary(args.dir_b)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if not rows_a or not rows_b:
        print("error: empty summary.csv", file=sys.stderr)
        return EXIT_IO

    seeds_a = [r["seed"] for r in rows_a]
    seeds_b = [r["seed"] for r in rows_b]
    if seeds_a != seeds_b:
        print(f"warning: seed mismatch ({seeds_a} vs {seeds_b})")

    agg_a = _aggregate(rows_a)
    agg_b = _aggregate(rows_b)
    name_a = args.dir_a.rstrip("/")
    name_b = args.dir_b.rstrip("/")
    width = max(len(name_a), len(name_b), 12)
    print(f"{'metric':<20} {name_a:>{width}} {name_b:>{width}} {'delta':>14}")
    for key in ("rejections", "drops", "min_connected_bps", "peak_sat_load"):
        va, vb = agg_a[key], agg_b[key]
        print(f"{key:<20} {va:>{width}g} {vb:>{width}g} {vb - va:>14g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sky3d",
        description="Hybrid satellite + aerial NR network simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write CSV metrics")
    src = p_run.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", help="path to a YAML scenario document")
    src.add_argument("--builtin", choices=sorted(BUILTINS),
                     help="named built-in scenario")
    p_run.add_argument("--seed", type=int, default=1)
    p_run.add_argument("--seeds", help="inclusive seed range, e.g. 1..10")
    p_run.add_argument("--out", default="./out", help="output directory")
    p_run.add_argument("--no-mobile-aps", action="store_true",
                       help="strip intervening APs from the scenario")
    p_run.add_argument("--strategy",
                       choices=["user_centric", "ran_controlled",
                                "ran_assisted"])
    p_run.add_argument("--tick-s", type=float, dest="tick_s")
    p_run.add_argument("--duration-s", type=float, dest="duration_s")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="compare two run output directories")
    p_cmp.add_argument("dir_a")
    p_cmp.add_argument("dir_b")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
