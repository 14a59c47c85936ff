"""Command-line interface.

Subcommands: simulate, analyze, predict, identify, map, sweep. Exit code 0
on success, 2 for configuration/parse problems, 3 for runtime failures
(singular operating points, estimation failures, ...).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .errors import (ConfigurationError, HifbenchError, ScenarioParseError,
                     WaveformParseError)
from .identify import default_d_grid, default_v_grid, effective_area_map, identify
from .phasors import sliding_phasor_stream
from .runner import run, sweep, write_bundle, write_sweep_table
from .scenario import Scenario, load_sweep, parse_flat, scenario_from_flat
from .waveform import import_waveforms

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--scenario", help="scenario file (flat key = value lines)")
    sub.add_argument("--out", default="out", help="output directory (default: out)")
    sub.add_argument("--seed", type=int, help="override the scenario seed")
    sub.add_argument("--thr", type=float, default=None,
                     help="indicator threshold in degrees (default 40)")
    sub.add_argument("--f0", type=float, default=None,
                     help="fundamental frequency in Hz (default 50)")
    sub.add_argument("--fs", type=float, default=None,
                     help="sample rate in Hz (default 6400)")


def _load_scenario_with_overrides(args) -> Scenario:
    if args.scenario:
        with open(args.scenario) as fh:
            text = fh.read()
    else:
        text = ""  # all defaults
    entries = parse_flat(text)

    def override(key: str, value) -> None:
        if value is not None:
            entries[key] = (repr(value) if not isinstance(value, str) else value, 0)

    override("seed", args.seed)
    override("analysis.thr", args.thr)
    override("sim.fs", args.fs)
    if args.f0 is not None:
        override("network.f0", args.f0)
        override("analysis.f0", args.f0)
    return scenario_from_flat(entries)


def _cmd_simulate(args) -> int:
    bundle = run(_load_scenario_with_overrides(args))
    write_bundle(bundle, args.out)
    print(f"simulated {bundle.record.duration:.3f} s, "
          f"channels: {', '.join(bundle.record.names)} -> {args.out}/waveforms.csv")
    return 0


def _cmd_analyze(args) -> int:
    bundle = run(_load_scenario_with_overrides(args))
    write_bundle(bundle, args.out)
    n_win = len(next(iter(bundle.streams.values())))
    print(f"{n_win} half-cycle windows per channel -> {args.out}/phasors.csv")
    return 0


def _cmd_predict(args) -> int:
    bundle = run(_load_scenario_with_overrides(args))
    write_bundle(bundle, args.out)
    worst = max(bundle.prediction_rms, key=bundle.prediction_rms.get)
    print(f"theory prediction -> {args.out}/prediction.csv "
          f"(worst channel {worst}: {bundle.prediction_rms[worst] * 100:.2f}% rel RMS)")
    if bundle.estimate is not None:
        est = bundle.estimate
        print(f"estimated v={est.v:.4f} d={est.d:.4f} r_coil={est.r_coil:.3f}")
    else:
        print(f"estimation failed: {bundle.estimate_error}")
    return 0


def _cmd_identify(args) -> int:
    if args.waveforms:
        record = import_waveforms(args.waveforms)
        f0 = args.f0 if args.f0 is not None else 50.0
        thr = args.thr if args.thr is not None else 40.0
        feeders = [ch for ch in record.names
                   if ch.startswith("i_0") and ch not in ("i_0f", "i_0N")]
        if len(feeders) < 2:
            raise ConfigurationError(
                "need >= 2 feeder channels named 'i_0<feeder>' in the CSV")
        streams = {ch[len("i_0"):]: sliding_phasor_stream(record, ch, f0, m=3)
                   for ch in feeders}
        result = identify(streams, thr=thr)
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "verdict.txt"), "w", newline="\n") as fh:
            fh.write(result.aggregated_name + "\n")
        print(f"verdict: {result.aggregated_name}")
        return 0
    bundle = run(_load_scenario_with_overrides(args))
    write_bundle(bundle, args.out)
    print(f"verdict: {bundle.verdict} "
          f"(configured faulty feeder: {bundle.scenario.network.faulty_name})")
    return 0


def _cmd_map(args) -> int:
    v_grid = default_v_grid(args.v_step)
    d_grid = default_d_grid(args.d_step)
    thr = args.thr if args.thr is not None else 40.0
    amap = effective_area_map(args.cn, v_grid, d_grid, method=args.method, thr=thr)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"map_{args.method}.csv")
    with open(path, "w", newline="\n") as fh:
        if args.method == "proposed":
            fh.write("v,d,indicator_deg,passed\n")
        else:
            fh.write("v,d,faulty_dev_deg,healthy_dev_deg,passed\n")
        for iv, v in enumerate(amap.v_grid):
            for jd, d in enumerate(amap.d_grid):
                if amap.singular[iv, jd]:
                    continue
                if args.method == "proposed":
                    fh.write("%.6g,%.6g,%.17g,%d\n"
                             % (v, d, amap.value_deg[iv, jd], int(amap.passed[iv, jd])))
                else:
                    fh.write("%.6g,%.6g,%.17g,%.17g,%d\n"
                             % (v, d, amap.value_deg[iv, jd],
                                amap.healthy_value_deg[iv, jd], int(amap.passed[iv, jd])))
    frac = float(np.mean(amap.passed[~amap.singular]))
    print(f"{args.method} map for c_n={args.cn}: {frac * 100:.1f}% of grid passes -> {path}")
    return 0


def _cmd_sweep(args) -> int:
    if not args.scenario:
        raise ConfigurationError("sweep requires --scenario pointing at a sweep file")
    spec = load_sweep(args.scenario)
    rows = sweep(spec, parallelism=args.parallelism)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "sweep.csv")
    write_sweep_table(rows, path)
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} cells ({failed} failed) -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hifbench",
        description="High-impedance-fault zero-sequence workbench: simulate "
                    "arc faults in resonant-grounded feeder networks and "
                    "identify the faulty feeder from 3rd-harmonic phases.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("simulate", help="run the scenario simulation and write the bundle")
    _common_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = subs.add_parser("analyze", help="simulate and emit sliding harmonic phasor streams")
    _common_flags(p)
    p.set_defaults(func=_cmd_analyze)

    p = subs.add_parser("predict", help="compare theoretical feeder currents against the simulation")
    _common_flags(p)
    p.set_defaults(func=_cmd_predict)

    p = subs.add_parser("identify", help="identify the faulty feeder")
    _common_flags(p)
    p.add_argument("--waveforms", help="analyze an existing waveform CSV instead of simulating")
    p.set_defaults(func=_cmd_identify)

    p = subs.add_parser("map", help="effective-area map over the (v, d) grid")
    _common_flags(p)
    p.add_argument("--cn", type=float, required=True,
                   help="faulty feeder capacitance share c_n")
    p.add_argument("--method", choices=("proposed", "classic"), default="proposed")
    p.add_argument("--v-step", type=float, default=0.005)
    p.add_argument("--d-step", type=float, default=0.01)
    p.set_defaults(func=_cmd_map)

    p = subs.add_parser("sweep", help="run a parameter sweep")
    _common_flags(p)
    p.add_argument("--parallelism", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioParseError, ConfigurationError, WaveformParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HifbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
