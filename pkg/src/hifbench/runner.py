"""End-to-end scenario execution, result bundles, and parameter sweeps.

A run simulates the scenario, discards the settling span, produces sliding
phasor streams for every measured channel, runs the identification, builds
the theoretical feeder-current prediction from the decomposed fault
current, and estimates the network parameters from the measurements. A
bundle directory contains ``waveforms.csv``, ``phasors.csv``,
``indicators.csv``, ``verdict.txt`` and a JSON ``manifest`` (no timestamps:
bundles of the same scenario and seed are bit-identical).
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._kernels import USING_NUMBA
from ._version import __version__
from .errors import ConfigurationError, EstimationError, HifbenchError
from .identify import IdentificationResult, classic_delta_phi, identify
from .network import (FaultSource, detuning_index, damping_ratio,
                      feeder_channel, simulate_zero_sequence)
from .phasors import DecompositionResult, PhasorSet, decompose_waveform, sliding_phasor_stream
from .scenario import Scenario, SweepSpec, scenario_for_cell, scenario_hash, \
    scenario_to_flat, sweep_cells
from .theory import NetworkEstimate, estimate_network_parameters, predict_feeder_waveforms
from .waveform import WaveformRecord, export_waveforms, import_waveforms


@dataclass
class RunBundle:
    scenario: Scenario
    record: WaveformRecord
    analysis_start: float
    streams: dict[str, list[PhasorSet]]
    identification: IdentificationResult
    fault_dec: DecompositionResult
    prediction: WaveformRecord
    prediction_rms: dict[str, float]
    estimate: NetworkEstimate | None
    estimate_error: str | None
    classic: dict[str, float]

    @property
    def verdict(self) -> str:
        return self.identification.aggregated_name


def _apply_noise(record: WaveformRecord, noise_std: float, seed: int) -> WaveformRecord:
    """Additive Gaussian measurement noise, noise_std relative to each
    channel's RMS; the arc-resistance channel is an internal state, not a
    measurement, and stays clean."""
    rng = np.random.default_rng(seed)
    channels = {}
    for name, data in record.channels.items():
        if name == "r_arc":
            channels[name] = data
            continue
        rms = float(np.sqrt(np.mean(data ** 2)))
        channels[name] = data + rng.normal(0.0, noise_std * rms, data.size)
    return WaveformRecord(fs=record.fs, channels=channels, t0=record.t0)


def effective_settle_cycles(scenario: Scenario) -> int:
    """Settling span: the configured floor or five network time constants,
    whichever is longer (the time constant is infinite in a lossless
    network, where only the configured floor applies)."""
    net = scenario.network
    cycles = scenario.sim.settle_cycles
    if net.g_sum > 0:
        tau_net = net.c_sum / net.g_sum
        cycles = max(cycles, math.ceil(5.0 * tau_net * net.f0))
    return cycles


def _materialize_source(scenario: Scenario) -> FaultSource:
    src = scenario.source
    if src.mode == "injected" and src.record_path is not None and src.record is None:
        record = import_waveforms(src.record_path)
        return FaultSource(mode="injected", record=record, record_path=src.record_path)
    return src


def run(scenario: Scenario) -> RunBundle:
    """Execute a scenario end to end. Deterministic for a fixed seed.

    Module errors propagate with the scenario identity attached.
    """
    try:
        return _run(scenario)
    except HifbenchError as exc:
        net = scenario.network
        context = (f"scenario sha256 {scenario_hash(scenario)[:12]}, "
                   f"faulty={net.faulty_name}, v={detuning_index(net):.4g}, "
                   f"d={damping_ratio(net):.4g}")
        raise type(exc)(f"{exc} [{context}]") from exc


def _run(scenario: Scenario) -> RunBundle:
    net = scenario.network
    f0 = scenario.analysis.f0
    fs = scenario.sim.fs
    source = _materialize_source(scenario)

    # A lossless network driven by an injected source keeps ringing forever;
    # start such runs on the periodic orbit instead of waiting in vain.
    init = "zero"
    if source.mode == "injected" and source.harmonics and net.g_sum == 0.0:
        init = "periodic"
    record = simulate_zero_sequence(net, source, scenario.sim.duration, fs, init=init)
    if scenario.sim.noise_std:
        record = _apply_noise(record, scenario.sim.noise_std, scenario.seed)

    n_cycle = int(round(fs / f0))
    settle = effective_settle_cycles(scenario) if init == "zero" else 0
    start = settle * n_cycle
    min_windows = scenario.analysis.k_consec + 2
    needed = start + n_cycle + (min_windows - 1) * (n_cycle // 2)
    if record.n_samples <= needed:
        raise ConfigurationError(
            f"duration {scenario.sim.duration} s leaves fewer than {min_windows} "
            f"analysis windows after {settle} settling cycles"
        )
    analysis_rec = record.slice_samples(start, record.n_samples)

    m = scenario.analysis.m
    feeder_names = [f.name for f in net.feeders]
    stream_channels = [feeder_channel(n) for n in feeder_names] + ["i_0N", "u_0b", "i_0f"]
    streams = {ch: sliding_phasor_stream(analysis_rec, ch, f0, m) for ch in stream_channels}

    ident = identify(
        {name: streams[feeder_channel(name)] for name in feeder_names},
        thr=scenario.analysis.thr, gate_rel=scenario.analysis.gate_rel,
        gate_abs=scenario.analysis.gate_abs, k_consec=scenario.analysis.k_consec,
    )

    fault_dec = decompose_waveform(analysis_rec, "i_0f", f0, m)
    prediction = predict_feeder_waveforms(fault_dec, net, method="damped")
    prediction_rms = {}
    for ch in prediction.names:
        sim = analysis_rec.channel(ch)
        ref = float(np.sqrt(np.mean(sim ** 2)))
        err = float(np.sqrt(np.mean((prediction.channel(ch) - sim) ** 2)))
        prediction_rms[ch] = err / ref if ref > 0 else float("nan")

    estimate = None
    estimate_error = None
    try:
        estimate = estimate_from_streams(streams, net.faulty_name, feeder_names,
                                         float(net.c_ratios[net.faulty_index]))
    except (EstimationError, ValueError) as exc:
        estimate_error = str(exc)

    classic = {}
    for ch in ["i_0f"] + [feeder_channel(n) for n in feeder_names]:
        vals = [classic_delta_phi(ps) for ps in streams[ch]]
        classic[ch] = float(np.median(vals))

    return RunBundle(scenario=scenario, record=record,
                     analysis_start=start / fs, streams=streams,
                     identification=ident, fault_dec=fault_dec,
                     prediction=prediction, prediction_rms=prediction_rms,
                     estimate=estimate, estimate_error=estimate_error,
                     classic=classic)


def estimate_from_streams(streams: dict[str, list[PhasorSet]], faulty_name: str,
                          feeder_names: list[str], c_n: float) -> NetworkEstimate:
    """Per-window estimates reduced by the median (robust to stragglers)."""
    n_win = len(streams["u_0b"])
    per: list[NetworkEstimate] = []
    for j in range(n_win):
        healthy = {name: streams[feeder_channel(name)][j]
                   for name in feeder_names if name != faulty_name}
        per.append(estimate_network_parameters(
            streams["u_0b"][j], healthy, streams["i_0N"][j], c_n))
    return NetworkEstimate(
        v=float(np.median([e.v for e in per])),
        d=float(np.median([e.d for e in per])),
        r_coil=float(np.median([e.r_coil for e in per])),
        r_feeders={name: float(np.median([e.r_feeders[name] for e in per]))
                   for name in per[0].r_feeders},
    )


def _module_versions() -> dict[str, str | None]:
    import numpy
    import scipy
    try:
        import numba
        numba_version = numba.__version__
    except ImportError:
        numba_version = None
    return {"hifbench": __version__, "numpy": numpy.__version__,
            "scipy": scipy.__version__, "numba": numba_version}


def write_bundle(bundle: RunBundle, outdir: str | os.PathLike) -> None:
    os.makedirs(outdir, exist_ok=True)
    outdir = os.fspath(outdir)

    export_waveforms(bundle.record, os.path.join(outdir, "waveforms.csv"))

    with open(os.path.join(outdir, "phasors.csv"), "w", newline="\n") as fh:
        fh.write("window_start,channel,k,amplitude,phase_deg\n")
        for ch, stream in bundle.streams.items():
            for ps in stream:
                for k in ps.orders:
                    fh.write("%.17g,%s,%d,%.17g,%.17g\n"
                             % (ps.window_start, ch, k, ps.amplitude(k), ps.phase_deg(k)))

    ident = bundle.identification
    with open(os.path.join(outdir, "indicators.csv"), "w", newline="\n") as fh:
        fh.write("window_start,feeder_a,feeder_b,indicator_deg,valid\n")
        for w in ident.windows:
            for a in range(len(ident.feeders)):
                for b in range(a + 1, len(ident.feeders)):
                    fh.write("%.17g,%s,%s,%.17g,%d\n"
                             % (w.window_start, ident.feeders[a], ident.feeders[b],
                                w.indicator_deg[a, b], int(w.valid[a, b])))

    with open(os.path.join(outdir, "verdict.txt"), "w", newline="\n") as fh:
        fh.write(bundle.verdict + "\n")

    export_waveforms(bundle.prediction, os.path.join(outdir, "prediction.csv"))

    manifest = {
        "scenario_sha256": scenario_hash(bundle.scenario),
        "versions": _module_versions(),
        "using_numba": USING_NUMBA,
        "scenario": scenario_to_flat(bundle.scenario),
        "analysis_start_s": bundle.analysis_start,
        "verdict": bundle.verdict,
        "configured_faulty": bundle.scenario.network.faulty_name,
        "detuning_index": detuning_index(bundle.scenario.network),
        "damping_ratio": damping_ratio(bundle.scenario.network),
        "estimate": None if bundle.estimate is None else {
            "v": bundle.estimate.v, "d": bundle.estimate.d,
            "r_coil": bundle.estimate.r_coil,
            "r_feeders": bundle.estimate.r_feeders,
        },
        "estimate_error": bundle.estimate_error,
        "prediction_rel_rms": bundle.prediction_rms,
        "classic_delta_phi_deg": bundle.classic,
    }
    with open(os.path.join(outdir, "manifest"), "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Sweeps

def _metric_value(name: str, bundle: RunBundle):
    net = bundle.scenario.network
    if name == "verdict":
        return bundle.verdict
    if name == "correct":
        return bundle.identification.aggregated_verdict == net.faulty_index
    if name == "v_est":
        return None if bundle.estimate is None else bundle.estimate.v
    if name == "d_est":
        return None if bundle.estimate is None else bundle.estimate.d
    if name == "v_err":
        return None if bundle.estimate is None else bundle.estimate.v - detuning_index(net)
    if name == "d_err":
        return None if bundle.estimate is None else bundle.estimate.d - damping_ratio(net)
    if name == "pred_rms_max":
        return max(bundle.prediction_rms.values())
    if name == "n_windows":
        return len(bundle.identification.windows)
    if name == "fault_indicator_max":
        idx = net.faulty_index
        vals = []
        for w in bundle.identification.windows:
            for j in range(len(bundle.identification.feeders)):
                if j != idx and w.valid[idx, j]:
                    vals.append(w.indicator_deg[idx, j])
        return max(vals) if vals else None
    raise ConfigurationError(f"unknown sweep output metric '{name}'")


SWEEP_METRICS = ("verdict", "correct", "v_est", "d_est", "v_err", "d_err",
                 "pred_rms_max", "n_windows", "fault_indicator_max")


def sweep(spec: SweepSpec, parallelism: int = 1) -> list[dict]:
    """Run every grid cell; one result row per cell, in grid order.

    Rows carry the axis values, the requested output metrics, and an
    ``error`` field (None on success). Cell failures are recorded and the
    sweep continues. Results are independent of ``parallelism``.
    """
    for name in spec.outputs:
        if name not in SWEEP_METRICS:
            raise ConfigurationError(
                f"unknown sweep output metric '{name}' (known: {', '.join(SWEEP_METRICS)})")
    cells = sweep_cells(spec)

    def run_cell(args):
        index, overrides = args
        row = {"cell": index, **overrides}
        try:
            bundle = run(scenario_for_cell(spec, overrides))
            for name in spec.outputs:
                row[name] = _metric_value(name, bundle)
            row["error"] = None
        except HifbenchError as exc:
            for name in spec.outputs:
                row[name] = None
            row["error"] = str(exc)
        return row

    jobs = list(enumerate(cells))
    if parallelism <= 1:
        rows = [run_cell(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(run_cell, jobs))
    return rows


def write_sweep_table(rows: list[dict], path: str | os.PathLike) -> None:
    if not rows:
        raise ValueError("empty sweep result")
    cols = list(rows[0].keys())
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            cells = []
            for c in cols:
                v = row[c]
                if v is None:
                    cells.append("")
                elif isinstance(v, float):
                    cells.append("%.17g" % v)
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")
