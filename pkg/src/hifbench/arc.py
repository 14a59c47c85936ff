"""Energy-balance arc model for high-impedance faults.

The arc stores thermal energy Q with dQ/dt = u*i - P_loss. Treating the arc
as resistive turns this into a growth law for the arc resistance,

    d(ln R_arc)/dt = (P_loss - u*i) / tau,

with P_loss (dissipation to the surroundings) and tau (how fast R_arc reacts
to the stored energy) held constant per run. A large linear resistor r_series
sits in series with the arc to keep the fault current at high-impedance
levels. R_arc then spikes twice per fundamental cycle, peaking where u*i
crosses P_loss, which is what shapes the fault-current distortion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from ._kernels import arc_circuit_rk4
from .errors import ConfigurationError
from .waveform import WaveformRecord

#: Internal RK4 oversampling relative to the output rate. The arc equation
#: changes fastest near current zero-crossings; a 10x oversample keeps the
#: resistance-peak timing within one output sample.
OVERSAMPLE = 10

#: Clamp limits for the (otherwise unbounded) arc resistance, in ohms.
R_ARC_FLOOR = 1e-2
R_ARC_CEILING = 1e7

#: Default initial arc resistance in ohms; steady state is insensitive to it.
R_ARC_INIT_DEFAULT = 1e3

#: "High value" fraction of the half-cycle peak used for the duration metric.
DURATION_FRACTION_DEFAULT = 0.5


@dataclass(frozen=True)
class ArcParameters:
    """Constants of the energy-balance arc.

    p_loss : dissipated power in W; tau : energy constant in J (W*s);
    r_series : linear series resistance in ohms; r_arc_init : initial arc
    resistance in ohms.
    """

    p_loss: float
    tau: float
    r_series: float = 0.0
    r_arc_init: float = R_ARC_INIT_DEFAULT

    def __post_init__(self):
        if not (self.p_loss > 0):
            raise ValueError(f"p_loss must be > 0, got {self.p_loss}")
        if not (self.tau > 0):
            raise ValueError(f"tau must be > 0, got {self.tau}")
        if self.r_series < 0:
            raise ValueError(f"r_series must be >= 0, got {self.r_series}")
        if not (self.r_arc_init > 0):
            raise ValueError(f"r_arc_init must be > 0, got {self.r_arc_init}")


@dataclass(frozen=True)
class ArcState:
    """Instantaneous arc resistance (ohms) at time t (s)."""

    r_arc: float
    t: float = 0.0

    def __post_init__(self):
        if not (self.r_arc > 0):
            raise ValueError(f"r_arc must stay positive, got {self.r_arc}")


@dataclass(frozen=True)
class ArcSource:
    """Sinusoidal stiff source: amplitude in V (peak), frequency in Hz, phase in rad."""

    amplitude: float
    frequency: float
    phase: float = 0.0


@dataclass(frozen=True)
class DistortionMetrics:
    """Per-half-cycle distortion descriptors of the arc resistance curve.

    offset : seconds from the current zero-crossing that opens the half
        cycle to the r_arc peak; ``None`` when r_arc is flat (linear circuit).
    duration : seconds r_arc spends above ``fraction`` of the half-cycle peak.
    extent : the half-cycle peak r_arc in ohms.
    t_start : time of the opening zero-crossing.
    """

    offset: float | None
    duration: float
    extent: float
    t_start: float


def arc_resistance_step(state: ArcState, u_arc: float, i_arc: float, dt: float,
                        params: ArcParameters) -> ArcState:
    """Advance the arc resistance by one step with frozen (u_arc, i_arc).

    With constant input power the growth law is linear in ln(R_arc), so the
    exact update is R * exp((p_loss - u*i) * dt / tau); the result is clamped
    to [R_ARC_FLOOR, R_ARC_CEILING].
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not (math.isfinite(u_arc) and math.isfinite(i_arc) and math.isfinite(dt)):
        raise ValueError("non-finite arc step input")
    growth = (params.p_loss - u_arc * i_arc) * dt / params.tau
    if growth > 700.0:  # exp would overflow; the clamp applies anyway
        r_new = R_ARC_CEILING
    else:
        r_new = min(max(state.r_arc * math.exp(growth), R_ARC_FLOOR), R_ARC_CEILING)
    return ArcState(r_arc=r_new, t=state.t + dt)


def simulate_arc_circuit(source: ArcSource, params: ArcParameters,
                         duration: float, fs: float) -> WaveformRecord:
    """Simulate the series circuit source -> r_series -> arc.

    Classical RK4 at an internal step of 1/(OVERSAMPLE*fs), decimated to fs.
    Returns channels ``i`` (A), ``u_arc`` (V) and ``r_arc`` (ohm) on one
    time base starting at t = 0.

    Raises
    ------
    ConfigurationError
        If fs/frequency is not an integer (required for cycle-aligned
        windows downstream), fs < 20x the source frequency, or the duration
        covers fewer than two fundamental cycles.
    """
    f0 = source.frequency
    if f0 <= 0:
        raise ValueError(f"source frequency must be > 0, got {f0}")
    ratio = fs / f0
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigurationError(
            f"fs/f0 must be a positive integer for window alignment, got {fs}/{f0}"
        )
    if fs < 20 * f0:
        raise ConfigurationError(f"fs must be at least 20x the source frequency, got {fs}")
    if duration < 2.0 / f0:
        raise ConfigurationError(f"duration must cover >= 2 cycles, got {duration} s")

    n_out = int(round(duration * fs))
    h = 1.0 / (OVERSAMPLE * fs)
    t_half = np.arange(2 * OVERSAMPLE * (n_out - 1) + 1) * (0.5 * h)
    u_half = source.amplitude * np.sin(2.0 * np.pi * f0 * t_half + source.phase)
    i, u_arc, r_arc = arc_circuit_rk4(
        u_half, n_out, OVERSAMPLE, h, float(params.r_series), float(params.p_loss),
        float(params.tau), math.log(params.r_arc_init),
        math.log(R_ARC_FLOOR), math.log(R_ARC_CEILING),
    )
    return WaveformRecord(fs=fs, channels={"i": i, "u_arc": u_arc, "r_arc": r_arc})


def _zero_crossings(t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Times where x crosses zero, linearly interpolated between samples."""
    s = np.sign(x)
    idx = np.nonzero((s[:-1] != s[1:]) & (s[:-1] != 0))[0]
    frac = x[idx] / (x[idx] - x[idx + 1])
    crossings = t[idx] + frac * (t[idx + 1] - t[idx])
    exact = t[np.nonzero(x == 0.0)[0]]
    return np.unique(np.concatenate([crossings, exact]))


def distortion_metrics(record: WaveformRecord, f0: float,
                       fraction: float = DURATION_FRACTION_DEFAULT,
                       flat_rtol: float = 1e-9) -> list[DistortionMetrics]:
    """Per-half-cycle offset / duration / extent of the ``r_arc`` channel.

    Half cycles are delimited by consecutive zero-crossings of the ``i``
    channel. ``fraction`` sets the "certain high value" for the duration
    metric (time above fraction * half-cycle peak). When r_arc is flat to
    within ``flat_rtol`` the offset is reported as ``None``.
    """
    for ch in ("i", "r_arc"):
        if ch not in record.channels:
            raise ValueError(f"distortion_metrics needs channel '{ch}'")
    if record.duration < 1.0 / f0:
        raise ValueError("record must span at least one fundamental cycle")
    t = record.t
    i = record.channel("i")
    r = record.channel("r_arc")
    zc = _zero_crossings(t, i)
    out: list[DistortionMetrics] = []
    dt = 1.0 / record.fs
    for t_a, t_b in zip(zc[:-1], zc[1:]):
        lo = int(np.searchsorted(t, t_a, side="left"))
        hi = int(np.searchsorted(t, t_b, side="right"))
        if hi - lo < 3:
            continue
        seg = r[lo:hi]
        extent = float(np.max(seg))
        if extent - float(np.min(seg)) <= flat_rtol * extent:
            out.append(DistortionMetrics(offset=None, duration=t_b - t_a,
                                         extent=extent, t_start=float(t_a)))
            continue
        peak_idx = lo + int(np.argmax(seg))
        offset = float(t[peak_idx] - t_a)
        duration = float(np.count_nonzero(seg >= fraction * extent) * dt)
        duration = min(duration, t_b - t_a)
        out.append(DistortionMetrics(offset=offset, duration=duration,
                                     extent=extent, t_start=float(t_a)))
    return out


def count_spikes_per_cycle(record: WaveformRecord, f0: float,
                           prominence_fraction: float = 0.1) -> float:
    """Average number of prominent r_arc maxima per fundamental cycle."""
    r = record.channel("r_arc")
    span = np.max(r) - np.min(r)
    if span <= 0:
        return 0.0
    peaks, _ = find_peaks(r, prominence=prominence_fraction * span)
    cycles = record.duration * f0
    return len(peaks) / cycles
