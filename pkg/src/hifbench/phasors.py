"""One-cycle DFT phasors, waveform decomposition, and sliding phasor streams.

Conventions used throughout:

* A phasor (A, phi) describes the component ``A * sin(k*w0*t + phi)`` with A
  the peak amplitude and phi in degrees wrapped to (-180, 180].
* :func:`window_phasors` references phases to the *window start*.
* :func:`sliding_phasor_stream` advances a one-cycle window by half a cycle
  ("twice per cycle") and re-references every phase to the record origin via
  the shift theorem; a stationary signal therefore yields the same PhasorSet
  in every window. Same-window phase differences are unaffected by the
  common reference, which is all the feeder indicator consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angles import wrap_deg
from .errors import ConfigurationError
from .waveform import WaveformRecord


@dataclass(frozen=True)
class PhasorSet:
    """Fundamental + harmonic phasors of one channel over one window.

    ``phasors`` maps harmonic order k (1..m) to (peak amplitude, phase in
    degrees). The k = 1 entry is always present.
    """

    window_start: float
    f0: float
    phasors: dict[int, tuple[float, float]]

    def __post_init__(self):
        if 1 not in self.phasors:
            raise ValueError("PhasorSet must contain the fundamental (k = 1)")

    @property
    def orders(self) -> tuple[int, ...]:
        return tuple(sorted(self.phasors))

    def amplitude(self, k: int) -> float:
        self._check(k)
        return self.phasors[k][0]

    def phase_deg(self, k: int) -> float:
        self._check(k)
        return self.phasors[k][1]

    def _check(self, k: int) -> None:
        if k not in self.phasors:
            raise ValueError(f"phasor set has no harmonic k={k} (orders: {self.orders})")


@dataclass(frozen=True)
class DecompositionResult:
    """Split of a waveform into its fundamental and the distortion residual.

    ``sinusoidal + distortional == original`` holds pointwise by
    construction. ``phasors`` carries the k = 1..m content of the analyzed
    span, referenced to the record start.
    """

    sinusoidal: WaveformRecord
    distortional: WaveformRecord
    phasors: PhasorSet


def _samples_per_cycle(fs: float, f0: float) -> int:
    n = fs / f0
    if abs(n - round(n)) > 1e-9 or round(n) < 4:
        raise ConfigurationError(f"fs/f0 must be an integer >= 4, got {fs}/{f0}")
    return int(round(n))


def _window_to_phasors(window: np.ndarray, m: int) -> dict[int, tuple[float, float]]:
    n = window.size
    spec = np.fft.rfft(window)
    amps = 2.0 * np.abs(spec[1:m + 1]) / n
    # rfft of A*sin(k*th + phi) gives -j*(n/2)*A*exp(j*phi): add 90 degrees.
    phases = wrap_deg(np.degrees(np.angle(spec[1:m + 1])) + 90.0)
    return {k: (float(amps[k - 1]), float(phases[k - 1])) for k in range(1, m + 1)}


def window_phasors(record: WaveformRecord, channel: str, window_start: float,
                   f0: float, m: int) -> PhasorSet:
    """DFT phasors of one exact fundamental cycle starting at ``window_start``.

    Phases are referenced to the window start. The window start is snapped
    to the nearest sample; a window that does not fit in the record raises
    ``ValueError``.
    """
    n_cyc = _samples_per_cycle(record.fs, f0)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if m > n_cyc // 2 - 1:
        raise ValueError(f"m={m} exceeds the Nyquist limit {n_cyc // 2 - 1} for fs/f0={n_cyc}")
    i0 = int(round((window_start - record.t0) * record.fs))
    if i0 < 0 or i0 + n_cyc > record.n_samples:
        raise ValueError(
            f"window [{window_start}, +1 cycle) exceeds record bounds "
            f"[{record.t0}, {record.t0 + record.duration}]"
        )
    x = record.channel(channel)[i0:i0 + n_cyc]
    return PhasorSet(window_start=record.t0 + i0 / record.fs, f0=f0,
                     phasors=_window_to_phasors(x, m))


def decompose_waveform(record: WaveformRecord, channel: str, f0: float,
                       m: int = 11) -> DecompositionResult:
    """Resolve a channel into fundamental reconstruction + distortion residual.

    The fundamental phasor is obtained by DFT over the longest
    integer-cycle span of the record; the reconstruction extends over the
    full record so that sinusoidal + distortional = original exactly.
    """
    n_cyc = _samples_per_cycle(record.fs, f0)
    x = record.channel(channel)
    cycles = x.size // n_cyc
    if cycles < 1:
        raise ValueError("record must span at least one fundamental cycle")
    span = cycles * n_cyc
    spec = np.fft.rfft(x[:span])
    if m < 1 or m > n_cyc // 2 - 1:
        raise ValueError(f"m={m} out of range for fs/f0={n_cyc}")
    phasors: dict[int, tuple[float, float]] = {}
    for k in range(1, m + 1):
        c = spec[k * cycles]
        amp = 2.0 * np.abs(c) / span
        ph = float(wrap_deg(np.degrees(np.angle(c)) + 90.0))
        phasors[k] = (float(amp), ph)
    a1, p1 = phasors[1]
    tt = np.arange(x.size) / record.fs
    sinu = a1 * np.sin(2.0 * np.pi * f0 * tt + np.radians(p1))
    dist = x - sinu
    return DecompositionResult(
        sinusoidal=WaveformRecord(fs=record.fs, channels={channel: sinu}, t0=record.t0),
        distortional=WaveformRecord(fs=record.fs, channels={channel: dist}, t0=record.t0),
        phasors=PhasorSet(window_start=record.t0, f0=f0, phasors=phasors),
    )


def recompose_scaled(dec: DecompositionResult, p: float) -> WaveformRecord:
    """Rebuild ``sinusoidal + p * distortional``; p=1 is the original signal."""
    (name,) = dec.sinusoidal.names
    data = dec.sinusoidal.channel(name) + p * dec.distortional.channel(name)
    return WaveformRecord(fs=dec.sinusoidal.fs, channels={name: data},
                          t0=dec.sinusoidal.t0)


def sliding_phasor_stream(record: WaveformRecord, channel: str, f0: float,
                          m: int) -> list[PhasorSet]:
    """One-cycle phasor windows advanced by half a cycle.

    Requires fs/f0 to be an even integer so consecutive windows stay sample
    aligned. Phases are re-referenced to the record origin (see module
    docstring), so every channel of one record produces streams on
    identical window boundaries with directly comparable phases.
    """
    n_cyc = _samples_per_cycle(record.fs, f0)
    if n_cyc % 2 != 0:
        raise ConfigurationError(
            f"fs/f0 must be an even integer for half-cycle windows, got {n_cyc}"
        )
    if m < 1 or m > n_cyc // 2 - 1:
        raise ValueError(f"m={m} out of range for fs/f0={n_cyc}")
    half = n_cyc // 2
    x = record.channel(channel)
    n_win = (x.size - n_cyc) // half + 1
    if n_win < 1:
        raise ValueError("record too short for a single one-cycle window")
    windows = np.lib.stride_tricks.sliding_window_view(x, n_cyc)[::half][:n_win]
    spec = np.fft.rfft(windows, axis=1)
    ks = np.arange(1, m + 1)
    amps = 2.0 * np.abs(spec[:, 1:m + 1]) / n_cyc
    phases = np.degrees(np.angle(spec[:, 1:m + 1])) + 90.0
    # Shift-theorem re-reference: window j starts at j*T0/2, i.e. k*180*j deg.
    phases = wrap_deg(phases - 180.0 * ks[None, :] * np.arange(n_win)[:, None])
    out: list[PhasorSet] = []
    for j in range(n_win):
        ph = {int(k): (float(amps[j, k - 1]), float(phases[j, k - 1])) for k in ks}
        out.append(PhasorSet(window_start=record.t0 + j * half / record.fs,
                             f0=f0, phasors=ph))
    return out
