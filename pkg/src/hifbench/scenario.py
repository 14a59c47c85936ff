"""Scenario and sweep configuration files.

The format is flat structured text: one ``dotted.key = value`` per line,
``#`` comments, sections encoded in the first key component. Unknown keys,
duplicate keys, and type errors are reported with the key path and line
number. :func:`save_scenario` emits a canonical form (sorted sections,
resolved defaults, 17-digit floats), so load -> save -> load is a fixpoint
and the canonical text is what the run manifest hashes.

Coil settings may be given either physically (``network.coil_l`` henry,
``network.coil_r`` ohm) or through targets (``network.v_target`` detuning
index, ``network.d_target`` damping ratio); targets take precedence and are
resolved to the physical values at load time.
"""

from __future__ import annotations

import hashlib
import math
import itertools
import os
import re
from dataclasses import dataclass

from .arc import ArcParameters
from .errors import ConfigurationError, ScenarioParseError
from .network import FaultSource, FeederSpec, HarmonicComponent, NetworkParameters

# Fig.-4-style default network: four feeders with capacitance proportional
# to the line lengths 13.3 : 10.8 : 10.8 : 24.7 km, 100 uF total.
DEFAULT_LENGTHS = (13.3, 10.8, 10.8, 24.7)
DEFAULT_C_TOTAL = 1.0e-4
#: Peak phase-to-ground voltage of a 10 kV system, sqrt(2/3) * 10 kV.
DEFAULT_UF_AMPLITUDE = 8164.965809277261


@dataclass(frozen=True)
class SimSettings:
    duration: float = 1.2
    fs: float = 6400.0
    settle_cycles: int = 30
    noise_std: float | None = None


@dataclass(frozen=True)
class AnalysisSettings:
    f0: float = 50.0
    m: int = 11
    thr: float = 40.0
    gate_rel: float = 0.005
    gate_abs: float = 0.01
    k_consec: int = 5


@dataclass(frozen=True)
class Scenario:
    network: NetworkParameters
    source: FaultSource
    sim: SimSettings = SimSettings()
    analysis: AnalysisSettings = AnalysisSettings()
    seed: int = 0

    def __post_init__(self):
        ratio = self.sim.fs / self.analysis.f0
        if abs(ratio - round(ratio)) > 1e-9 or int(round(ratio)) % 2 != 0:
            raise ConfigurationError(
                f"fs/f0 must be an even integer for half-cycle windows, got "
                f"{self.sim.fs}/{self.analysis.f0}"
            )
        if self.sim.noise_std is not None and self.sim.noise_std < 0:
            raise ConfigurationError("sim.noise_std must be >= 0")


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian sweep: a base scenario (as its flat key dict), axes of
    (dotted key path, value list), and the metric names to collect."""

    base_flat: dict[str, str]
    axes: tuple[tuple[str, tuple[str, ...]], ...]
    outputs: tuple[str, ...] = ("verdict", "correct")


_KEY_PATTERNS: list[tuple[re.Pattern, str]] = [
    (re.compile(r"^network\.f0$"), "float"),
    (re.compile(r"^network\.feeder\.(\d+)\.name$"), "str"),
    (re.compile(r"^network\.feeder\.(\d+)\.c0$"), "float"),
    (re.compile(r"^network\.feeder\.(\d+)\.r0$"), "float"),
    (re.compile(r"^network\.coil_l$"), "float"),
    (re.compile(r"^network\.coil_r$"), "float"),
    (re.compile(r"^network\.v_target$"), "float"),
    (re.compile(r"^network\.d_target$"), "float"),
    (re.compile(r"^network\.faulty$"), "str"),
    (re.compile(r"^source\.mode$"), "str"),
    (re.compile(r"^source\.uf_amplitude$"), "float"),
    (re.compile(r"^source\.uf_phase_deg$"), "float"),
    (re.compile(r"^source\.uf_harmonic\.(\d+)\.amplitude$"), "float"),
    (re.compile(r"^source\.uf_harmonic\.(\d+)\.phase_deg$"), "float"),
    (re.compile(r"^source\.series_r$"), "float"),
    (re.compile(r"^source\.ramp_cycles$"), "float"),
    (re.compile(r"^source\.arc\.p_loss$"), "float"),
    (re.compile(r"^source\.arc\.tau$"), "float"),
    (re.compile(r"^source\.arc\.r_series$"), "float"),
    (re.compile(r"^source\.arc\.r_arc_init$"), "float"),
    (re.compile(r"^source\.injected\.(\d+)\.amplitude$"), "float"),
    (re.compile(r"^source\.injected\.(\d+)\.phase_deg$"), "float"),
    (re.compile(r"^source\.csv_path$"), "str"),
    (re.compile(r"^sim\.duration$"), "float"),
    (re.compile(r"^sim\.fs$"), "float"),
    (re.compile(r"^sim\.settle_cycles$"), "int"),
    (re.compile(r"^sim\.noise_std$"), "float"),
    (re.compile(r"^analysis\.f0$"), "float"),
    (re.compile(r"^analysis\.m$"), "int"),
    (re.compile(r"^analysis\.thr$"), "float"),
    (re.compile(r"^analysis\.gate_rel$"), "float"),
    (re.compile(r"^analysis\.gate_abs$"), "float"),
    (re.compile(r"^analysis\.k_consec$"), "int"),
    (re.compile(r"^seed$"), "int"),
    (re.compile(r"^sweep\.axis\.(\d+)\.path$"), "str"),
    (re.compile(r"^sweep\.axis\.(\d+)\.values$"), "str"),
    (re.compile(r"^sweep\.outputs$"), "str"),
]


def _validate_key(key: str, line: int) -> str:
    for pattern, kind in _KEY_PATTERNS:
        if pattern.match(key):
            return kind
    raise ScenarioParseError("unknown configuration key", key=key, line=line)


def parse_flat(text: str) -> dict[str, tuple[str, int]]:
    """Parse flat key = value lines into {key: (raw value, line number)}."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ScenarioParseError("expected 'key = value'", key=line, line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if not value:
            raise ScenarioParseError("empty value", key=key, line=lineno)
        _validate_key(key, lineno)
        if key in out:
            raise ScenarioParseError("duplicate key", key=key, line=lineno)
        out[key] = (value, lineno)
    return out


class _FlatReader:
    """Typed access over parsed flat keys with line-accurate errors."""

    def __init__(self, entries: dict[str, tuple[str, int]]):
        self.entries = dict(entries)
        self.used: set[str] = set()

    def _convert(self, key: str, raw: str, line: int, kind: str):
        try:
            if kind == "float":
                return float(raw)
            if kind == "int":
                val = float(raw)
                if val != int(val):
                    raise ValueError
                return int(val)
            return raw
        except ValueError:
            raise ScenarioParseError(f"expected {kind} value, got '{raw}'",
                                     key=key, line=line) from None

    def get(self, key: str, kind: str, default=None):
        if key not in self.entries:
            return default
        raw, line = self.entries[key]
        self.used.add(key)
        return self._convert(key, raw, line, kind)

    def require(self, key: str, kind: str):
        if key not in self.entries:
            raise ScenarioParseError("missing required key", key=key)
        return self.get(key, kind)

    def indexed(self, prefix: str) -> list[int]:
        """Sorted distinct integer indices appearing as ``prefix.<i>.*``."""
        pat = re.compile(re.escape(prefix) + r"\.(\d+)\.")
        idx = {int(m.group(1)) for k in self.entries if (m := pat.match(k))}
        return sorted(idx)

    def line_of(self, key: str) -> int | None:
        return self.entries[key][1] if key in self.entries else None


def _build_network(r: _FlatReader) -> NetworkParameters:
    f0 = r.get("network.f0", "float", 50.0)
    idx = r.indexed("network.feeder")
    if not idx:
        feeders = tuple(
            FeederSpec(name=f"L{i + 1}",
                       c0=length / sum(DEFAULT_LENGTHS) * DEFAULT_C_TOTAL)
            for i, length in enumerate(DEFAULT_LENGTHS)
        )
    else:
        if idx != list(range(1, len(idx) + 1)):
            raise ScenarioParseError(
                f"feeder indices must be contiguous starting at 1, got {idx}",
                key="network.feeder")
        feeders = []
        for i in idx:
            c0 = r.require(f"network.feeder.{i}.c0", "float")
            name = r.get(f"network.feeder.{i}.name", "str", f"L{i}")
            r0 = r.get(f"network.feeder.{i}.r0", "float")
            feeders.append(FeederSpec(name=name, c0=c0, r0=r0))
        feeders = tuple(feeders)

    faulty_raw = r.get("network.faulty", "str", "2")
    names = [f.name for f in feeders]
    if faulty_raw in names:
        faulty_index = names.index(faulty_raw)
    else:
        try:
            ordinal = int(faulty_raw)
        except ValueError:
            raise ScenarioParseError(
                f"network.faulty must be a feeder name or 1-based ordinal, got '{faulty_raw}'",
                key="network.faulty", line=r.line_of("network.faulty")) from None
        if not (1 <= ordinal <= len(feeders)):
            raise ScenarioParseError(
                f"network.faulty ordinal {ordinal} out of range 1..{len(feeders)}",
                key="network.faulty", line=r.line_of("network.faulty"))
        faulty_index = ordinal - 1

    v_target = r.get("network.v_target", "float")
    d_target = r.get("network.d_target", "float")
    coil_l = r.get("network.coil_l", "float")
    coil_r = r.get("network.coil_r", "float")
    if coil_l is None and coil_r is None and v_target is None and d_target is None:
        # Fully-default network: nominal detuning with coil damping.
        v_target, d_target = -0.05, 0.2
    try:
        omega0 = 2.0 * math.pi * f0
        c_sum = sum(f.c0 for f in feeders)
        # v is set by the coil inductance alone, d by the loss resistances
        # alone, so the two targets resolve independently; a target takes
        # precedence over the corresponding physical value.
        if v_target is not None:
            if v_target >= 0:
                raise ConfigurationError(
                    f"network.v_target must be negative (undercompensated), got {v_target}")
            coil_l = 1.0 / ((1.0 - v_target) * omega0 ** 2 * c_sum)
        elif coil_l is None:
            coil_l = 1.0 / (1.05 * omega0 ** 2 * c_sum)  # v = -0.05
        if d_target is not None:
            if d_target < 0:
                raise ConfigurationError(f"network.d_target must be >= 0, got {d_target}")
            g_target = d_target * omega0 * c_sum
            g_feeders = sum(0.0 if f.r0 is None else 1.0 / f.r0 for f in feeders)
            g_coil = g_target - g_feeders
            if g_coil < -1e-12 * max(g_target, 1e-30):
                raise ConfigurationError(
                    f"feeder leakage alone exceeds network.d_target = {d_target}")
            coil_r = None if g_coil <= 1e-30 else 1.0 / g_coil
        return NetworkParameters(f0=f0, feeders=feeders, coil_l=coil_l,
                                 coil_r=coil_r, faulty_index=faulty_index)
    except (ValueError, ConfigurationError) as exc:
        raise ScenarioParseError(str(exc), key="network") from exc


def _build_source(r: _FlatReader) -> FaultSource:
    mode = r.get("source.mode", "str", "coupled")
    try:
        if mode == "coupled":
            arc = ArcParameters(
                p_loss=r.get("source.arc.p_loss", "float", 4000.0),
                tau=r.get("source.arc.tau", "float", 6.0),
                r_series=r.get("source.arc.r_series", "float", 600.0),
                r_arc_init=r.get("source.arc.r_arc_init", "float", 500.0),
            )
            extra = []
            for k in r.indexed("source.uf_harmonic"):
                if k < 2:
                    raise ScenarioParseError(
                        "u_f harmonic orders start at 2 (the fundamental is "
                        "source.uf_amplitude)", key=f"source.uf_harmonic.{k}")
                extra.append(HarmonicComponent(
                    k=k,
                    amplitude=r.require(f"source.uf_harmonic.{k}.amplitude", "float"),
                    phase_deg=r.get(f"source.uf_harmonic.{k}.phase_deg", "float", 0.0),
                ))
            return FaultSource.coupled(
                r.get("source.uf_amplitude", "float", DEFAULT_UF_AMPLITUDE),
                r.get("source.uf_phase_deg", "float", 0.0),
                series_r=r.get("source.series_r", "float", 600.0),
                arc=arc, extra_harmonics=tuple(extra),
                ramp_cycles=r.get("source.ramp_cycles", "float", 0.0),
            )
        if mode == "injected_harmonics":
            comps = []
            for k in r.indexed("source.injected"):
                comps.append(HarmonicComponent(
                    k=k,
                    amplitude=r.require(f"source.injected.{k}.amplitude", "float"),
                    phase_deg=r.get(f"source.injected.{k}.phase_deg", "float", 0.0),
                ))
            if not comps:
                raise ScenarioParseError(
                    "injected_harmonics mode needs source.injected.<k>.amplitude keys",
                    key="source.injected")
            return FaultSource.injected_harmonics(comps)
        if mode == "injected_csv":
            path = r.require("source.csv_path", "str")
            return FaultSource(mode="injected", record_path=path)
    except ScenarioParseError:
        raise
    except (ValueError, ConfigurationError) as exc:
        raise ScenarioParseError(str(exc), key="source") from exc
    raise ScenarioParseError(
        f"source.mode must be coupled, injected_harmonics, or injected_csv, got '{mode}'",
        key="source.mode", line=r.line_of("source.mode"))


def scenario_from_flat(entries: dict[str, tuple[str, int]]) -> Scenario:
    r = _FlatReader({k: v for k, v in entries.items() if not k.startswith("sweep.")})
    network = _build_network(r)
    source = _build_source(r)
    sim = SimSettings(
        duration=r.get("sim.duration", "float", 1.2),
        fs=r.get("sim.fs", "float", 6400.0),
        settle_cycles=r.get("sim.settle_cycles", "int", 30),
        noise_std=r.get("sim.noise_std", "float"),
    )
    analysis = AnalysisSettings(
        f0=r.get("analysis.f0", "float", network.f0),
        m=r.get("analysis.m", "int", 11),
        thr=r.get("analysis.thr", "float", 40.0),
        gate_rel=r.get("analysis.gate_rel", "float", 0.005),
        gate_abs=r.get("analysis.gate_abs", "float", 0.01),
        k_consec=r.get("analysis.k_consec", "int", 5),
    )
    seed = r.get("seed", "int", 0)
    unused = set(r.entries) - r.used
    if unused:
        key = sorted(unused)[0]
        raise ScenarioParseError("key not applicable to the configured modes",
                                 key=key, line=r.line_of(key))
    try:
        return Scenario(network=network, source=source, sim=sim,
                        analysis=analysis, seed=seed)
    except ConfigurationError as exc:
        raise ScenarioParseError(str(exc), key="sim") from exc


def loads_scenario(text: str) -> Scenario:
    return scenario_from_flat(parse_flat(text))


def load_scenario(path: str | os.PathLike) -> Scenario:
    with open(path) as fh:
        return loads_scenario(fh.read())


def _fmt(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def scenario_to_flat(sc: Scenario) -> dict[str, str]:
    """Canonical flat representation with every default resolved."""
    out: dict[str, str] = {"network.f0": _fmt(sc.network.f0)}
    for i, f in enumerate(sc.network.feeders, start=1):
        out[f"network.feeder.{i}.name"] = f.name
        out[f"network.feeder.{i}.c0"] = _fmt(f.c0)
        if f.r0 is not None:
            out[f"network.feeder.{i}.r0"] = _fmt(f.r0)
    out["network.coil_l"] = _fmt(sc.network.coil_l)
    if sc.network.coil_r is not None:
        out["network.coil_r"] = _fmt(sc.network.coil_r)
    out["network.faulty"] = sc.network.faulty_name

    src = sc.source
    if src.mode == "coupled":
        out["source.mode"] = "coupled"
        fundamental = next(h for h in src.harmonics if h.k == 1)
        out["source.uf_amplitude"] = _fmt(fundamental.amplitude)
        out["source.uf_phase_deg"] = _fmt(fundamental.phase_deg)
        for h in src.harmonics:
            if h.k == 1:
                continue
            out[f"source.uf_harmonic.{h.k}.amplitude"] = _fmt(h.amplitude)
            out[f"source.uf_harmonic.{h.k}.phase_deg"] = _fmt(h.phase_deg)
        out["source.series_r"] = _fmt(src.series_r)
        if src.ramp_cycles:
            out["source.ramp_cycles"] = _fmt(src.ramp_cycles)
        out["source.arc.p_loss"] = _fmt(src.arc.p_loss)
        out["source.arc.tau"] = _fmt(src.arc.tau)
        out["source.arc.r_series"] = _fmt(src.arc.r_series)
        out["source.arc.r_arc_init"] = _fmt(src.arc.r_arc_init)
    elif src.record_path is not None:
        out["source.mode"] = "injected_csv"
        out["source.csv_path"] = src.record_path
    else:
        out["source.mode"] = "injected_harmonics"
        for h in src.harmonics:
            out[f"source.injected.{h.k}.amplitude"] = _fmt(h.amplitude)
            out[f"source.injected.{h.k}.phase_deg"] = _fmt(h.phase_deg)

    out["sim.duration"] = _fmt(sc.sim.duration)
    out["sim.fs"] = _fmt(sc.sim.fs)
    out["sim.settle_cycles"] = _fmt(sc.sim.settle_cycles)
    if sc.sim.noise_std is not None:
        out["sim.noise_std"] = _fmt(sc.sim.noise_std)
    out["analysis.f0"] = _fmt(sc.analysis.f0)
    out["analysis.m"] = _fmt(sc.analysis.m)
    out["analysis.thr"] = _fmt(sc.analysis.thr)
    out["analysis.gate_rel"] = _fmt(sc.analysis.gate_rel)
    out["analysis.gate_abs"] = _fmt(sc.analysis.gate_abs)
    out["analysis.k_consec"] = _fmt(sc.analysis.k_consec)
    out["seed"] = _fmt(sc.seed)
    return out


def dumps_scenario(sc: Scenario) -> str:
    lines = [f"{k} = {v}" for k, v in scenario_to_flat(sc).items()]
    return "\n".join(lines) + "\n"


def save_scenario(sc: Scenario, path: str | os.PathLike) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_scenario(sc))


def scenario_hash(sc: Scenario) -> str:
    return hashlib.sha256(dumps_scenario(sc).encode()).hexdigest()


def load_sweep(path: str | os.PathLike) -> SweepSpec:
    with open(path) as fh:
        text = fh.read()
    return loads_sweep(text)


def loads_sweep(text: str) -> SweepSpec:
    entries = parse_flat(text)
    base = {k: v for k, (v, _) in entries.items() if not k.startswith("sweep.")}
    # Materialize once so base errors surface at load time.
    scenario_from_flat({k: (v, 0) for k, v in base.items()})

    r = _FlatReader(entries)
    axes = []
    for i in r.indexed("sweep.axis"):
        path_key = f"sweep.axis.{i}.path"
        path = r.require(path_key, "str")
        _validate_key(path, r.line_of(path_key) or 0)
        raw_values = r.require(f"sweep.axis.{i}.values", "str")
        values = tuple(v.strip() for v in raw_values.split(",") if v.strip())
        if not values:
            raise ScenarioParseError("axis value list is empty",
                                     key=f"sweep.axis.{i}.values",
                                     line=r.line_of(f"sweep.axis.{i}.values"))
        axes.append((path, values))
    if not axes:
        raise ScenarioParseError("a sweep needs at least one sweep.axis.<i>", key="sweep.axis")
    outputs_raw = r.get("sweep.outputs", "str", "verdict,correct")
    outputs = tuple(o.strip() for o in outputs_raw.split(",") if o.strip())
    return SweepSpec(base_flat=base, axes=tuple(axes), outputs=outputs)


def sweep_cells(spec: SweepSpec) -> list[dict[str, str]]:
    """Flat-key override dicts for every grid cell, in axis-major order."""
    paths = [p for p, _ in spec.axes]
    cells = []
    for combo in itertools.product(*(vals for _, vals in spec.axes)):
        cells.append(dict(zip(paths, combo)))
    return cells


def scenario_for_cell(spec: SweepSpec, overrides: dict[str, str]) -> Scenario:
    flat = dict(spec.base_flat)
    flat.update(overrides)
    return scenario_from_flat({k: (v, 0) for k, v in flat.items()})
