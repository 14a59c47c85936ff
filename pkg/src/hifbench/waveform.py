"""Uniformly sampled, synchronized multi-channel time series and its CSV form.

The CSV layout is fixed: first column ``t`` in seconds, one column per
channel, mandatory header row, LF line endings, ``.`` decimal separator.
Floats are written with 17 significant digits so an export/import round trip
reproduces the original samples bit for bit.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import WaveformParseError

_FLOAT_FMT = "%.17g"


@dataclass
class WaveformRecord:
    """Multi-channel waveform on one shared, uniform time base.

    Parameters
    ----------
    fs : float
        Sample rate in Hz.
    channels : dict
        Channel name -> 1-D float array. All arrays must share one length.
    t0 : float
        Time of the first sample in seconds.
    """

    fs: float
    channels: dict[str, np.ndarray]
    t0: float = 0.0

    def __post_init__(self):
        if self.fs <= 0:
            raise ValueError(f"sample rate must be positive, got {self.fs}")
        if not self.channels:
            raise ValueError("a waveform record needs at least one channel")
        clean: dict[str, np.ndarray] = {}
        n = None
        for name, data in self.channels.items():
            arr = np.asarray(data, dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"channel '{name}' must be 1-D, got shape {arr.shape}")
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise ValueError(
                    f"channel '{name}' has {arr.size} samples, expected {n} "
                    "(all channels share one time base)"
                )
            clean[name] = arr
        if n == 0:
            raise ValueError("channels must contain at least one sample")
        self.channels = clean

    @property
    def n_samples(self) -> int:
        return next(iter(self.channels.values())).size

    @property
    def duration(self) -> float:
        """Time span covered by the samples, ``(n_samples - 1) / fs``."""
        return (self.n_samples - 1) / self.fs

    @property
    def t(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_samples) / self.fs

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.channels)

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.channels[name]
        except KeyError:
            raise ValueError(
                f"record has no channel '{name}' (available: {', '.join(self.channels)})"
            ) from None

    def slice_samples(self, start: int, stop: int | None = None) -> "WaveformRecord":
        """Sub-record over sample indices [start, stop)."""
        stop = self.n_samples if stop is None else stop
        if not (0 <= start < stop <= self.n_samples):
            raise ValueError(f"invalid sample slice [{start}, {stop}) for {self.n_samples} samples")
        return WaveformRecord(
            fs=self.fs,
            channels={k: v[start:stop].copy() for k, v in self.channels.items()},
            t0=self.t0 + start / self.fs,
        )

    def with_channel(self, name: str, data: np.ndarray) -> "WaveformRecord":
        chans = dict(self.channels)
        chans[name] = data
        return WaveformRecord(fs=self.fs, channels=chans, t0=self.t0)


def export_waveforms(record: WaveformRecord, path: str | os.PathLike) -> None:
    """Write a record to CSV (header ``t,<ch>,...``, 17-digit floats, LF)."""
    names = record.names
    cols = [record.t] + [record.channels[n] for n in names]
    with open(path, "w", newline="\n") as fh:
        fh.write("t," + ",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(_FLOAT_FMT % x for x in row) + "\n")


def import_waveforms(path: str | os.PathLike) -> WaveformRecord:
    """Read a waveform CSV written by :func:`export_waveforms` (or compatible).

    Raises
    ------
    WaveformParseError
        On a missing/invalid header, ragged rows, unparsable numbers, or a
        non-monotonic / non-uniform time column. The error carries the
        1-based row number where parsing failed.
    """
    with open(path, "r", newline=None) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise WaveformParseError("empty waveform file", row=1)
    header = [h.strip() for h in lines[0].split(",")]
    if len(header) < 2 or header[0] != "t":
        raise WaveformParseError(
            "header must be 't,<channel>[,<channel>...]', got " + repr(lines[0]), row=1
        )
    names = header[1:]
    if len(set(names)) != len(names):
        raise WaveformParseError("duplicate channel names in header", row=1)
    ncol = len(header)
    rows: list[list[float]] = []
    for idx, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != ncol:
            raise WaveformParseError(
                f"expected {ncol} columns, found {len(parts)}", row=idx
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise WaveformParseError("unparsable number " + repr(line), row=idx) from None
    if len(rows) < 2:
        raise WaveformParseError("waveform needs at least two samples", row=len(lines))
    data = np.asarray(rows, dtype=float)
    t = data[:, 0]
    dt = np.diff(t)
    if np.any(dt <= 0):
        bad = int(np.argmax(dt <= 0))
        raise WaveformParseError("time column is not strictly increasing", row=bad + 3)
    dt0 = (t[-1] - t[0]) / (len(t) - 1)
    if np.max(np.abs(dt - dt0)) > 1e-6 * dt0:
        bad = int(np.argmax(np.abs(dt - dt0)))
        raise WaveformParseError("time column is not uniformly sampled", row=bad + 3)
    fs = 1.0 / dt0
    # Snap to an integer rate when the text representation rounded it.
    if abs(fs - round(fs)) < 1e-6 * fs:
        fs = float(round(fs))
    channels = {name: data[:, j + 1].copy() for j, name in enumerate(names)}
    return WaveformRecord(fs=fs, channels=channels, t0=float(t[0]))
