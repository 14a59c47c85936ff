"""n-feeder zero-sequence equivalent circuit and its time-domain simulation.

The circuit is the parallel tank seen from the substation bus: the Petersen
coil path (inductance L, optional parallel loss resistance R) and one
capacitance C_0i with optional leakage resistance R_0i per feeder, all tied
to the bus voltage u_0b. The fault current i_0f enters the bus either as a
prescribed injection or through the coupled fault branch
u_f -> series resistance -> arc.

Measured quantities follow the circuit orientation: feeder currents flow
from the bus into the feeder (so the faulty feeder carries its own shunt
current minus the fault current) and the substation current flows into the
coil path. The sum of all feeder currents plus the substation current is
zero at every sample by construction (KCL).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from ._kernels import net_coupled_rk4, net_injected_rk4
from .arc import OVERSAMPLE, R_ARC_CEILING, R_ARC_FLOOR, ArcParameters
from .errors import ConfigurationError, SingularNetworkError
from .waveform import WaveformRecord

#: Nominal detuning band of a resonant-grounded network.
NOMINAL_V_BAND = (-0.1, 0.0)


@dataclass(frozen=True)
class FeederSpec:
    """One feeder's zero-sequence shunt: capacitance c0 (F) and optional
    phase-to-earth leakage resistance r0 (ohm); ``None`` means no leakage."""

    name: str
    c0: float
    r0: float | None = None

    def __post_init__(self):
        if not (self.c0 > 0):
            raise ValueError(f"feeder '{self.name}': c0 must be > 0, got {self.c0}")
        if self.r0 is not None and not (self.r0 > 0):
            raise ValueError(f"feeder '{self.name}': r0 must be > 0 when present, got {self.r0}")


@dataclass(frozen=True)
class NetworkParameters:
    """Zero-sequence network: feeders, coil inductance L (H), optional coil
    parallel loss resistance R (ohm), and the index of the faulty feeder
    (0-based position in ``feeders``)."""

    f0: float
    feeders: tuple[FeederSpec, ...]
    coil_l: float
    coil_r: float | None = None
    faulty_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "feeders", tuple(self.feeders))
        if self.f0 <= 0:
            raise ValueError(f"f0 must be > 0, got {self.f0}")
        if len(self.feeders) < 2:
            raise ValueError(f"need at least 2 feeders, got {len(self.feeders)}")
        names = [f.name for f in self.feeders]
        if len(set(names)) != len(names):
            raise ValueError(f"feeder names must be unique, got {names}")
        if not (self.coil_l > 0):
            raise ValueError(f"coil_l must be > 0, got {self.coil_l}")
        if self.coil_r is not None and not (self.coil_r > 0):
            raise ValueError(f"coil_r must be > 0 when present, got {self.coil_r}")
        if not (0 <= self.faulty_index < len(self.feeders)):
            raise ValueError(
                f"faulty_index {self.faulty_index} out of range for {len(self.feeders)} feeders"
            )
        s = self.omega0 ** 2 * self.coil_l * self.c_sum
        if not (0.0 < s < 1.0):
            raise ValueError(
                f"w0^2*L*C_sum must lie in (0, 1) for undercompensated operation, got {s:.6g}"
            )

    @property
    def omega0(self) -> float:
        return 2.0 * math.pi * self.f0

    @property
    def c_sum(self) -> float:
        return sum(f.c0 for f in self.feeders)

    @property
    def c_ratios(self) -> np.ndarray:
        """Capacitance shares c_i = C_0i / C_sum, ordered like ``feeders``."""
        c = np.array([f.c0 for f in self.feeders])
        return c / c.sum()

    @property
    def g_coil(self) -> float:
        return 0.0 if self.coil_r is None else 1.0 / self.coil_r

    @property
    def g_feeders(self) -> np.ndarray:
        return np.array([0.0 if f.r0 is None else 1.0 / f.r0 for f in self.feeders])

    @property
    def g_sum(self) -> float:
        """Total loss conductance 1/R_sum = 1/R + sum(1/R_0i)."""
        return self.g_coil + float(self.g_feeders.sum())

    @property
    def faulty_name(self) -> str:
        return self.feeders[self.faulty_index].name

    @property
    def in_nominal_band(self) -> bool:
        v = detuning_index(self)
        return NOMINAL_V_BAND[0] <= v < NOMINAL_V_BAND[1]

    def r_ratios(self) -> tuple[float, np.ndarray]:
        """(r_R, r_R0i[]) = loss shares R_sum/R and R_sum/R_0i; zeros when lossless."""
        g = self.g_sum
        if g == 0.0:
            return 0.0, np.zeros(len(self.feeders))
        return self.g_coil / g, self.g_feeders / g

    @classmethod
    def from_targets(cls, f0: float, c0s, v: float, d: float, faulty_index: int,
                     names=None, r0s=None) -> "NetworkParameters":
        """Build a network realizing detuning index v and damping ratio d.

        The coil inductance follows from v; the coil loss resistance absorbs
        whatever damping the per-feeder leakages (``r0s``) do not provide.
        """
        if v >= 0:
            raise ValueError(f"target v must be negative (undercompensated), got {v}")
        if d < 0:
            raise ValueError(f"target d must be >= 0, got {d}")
        c0s = [float(c) for c in c0s]
        n = len(c0s)
        if names is None:
            names = [f"L{i + 1}" for i in range(n)]
        if r0s is None:
            r0s = [None] * n
        feeders = tuple(FeederSpec(name=nm, c0=c, r0=r) for nm, c, r in zip(names, c0s, r0s))
        omega0 = 2.0 * math.pi * f0
        c_sum = sum(c0s)
        coil_l = 1.0 / ((1.0 - v) * omega0 ** 2 * c_sum)
        g_target = d * omega0 * c_sum
        g_feeders = sum(0.0 if r is None else 1.0 / r for r in r0s)
        g_coil = g_target - g_feeders
        if g_coil < -1e-12 * max(g_target, 1e-30):
            raise ConfigurationError(
                f"feeder leakage alone gives d={g_feeders / (omega0 * c_sum):.4g} "
                f"> target d={d}; cannot realize with a passive coil resistance"
            )
        coil_r = None if g_coil <= 1e-30 else 1.0 / g_coil
        return cls(f0=f0, feeders=feeders, coil_l=coil_l, coil_r=coil_r,
                   faulty_index=faulty_index)


def detuning_index(params: NetworkParameters) -> float:
    """v = 1 - 1/(w0^2 * L * C_sum); negative when the coil overcompensates."""
    return 1.0 - 1.0 / (params.omega0 ** 2 * params.coil_l * params.c_sum)


def damping_ratio(params: NetworkParameters) -> float:
    """d = 1/(w0 * R_sum * C_sum) with 1/R_sum the total loss conductance."""
    return params.g_sum / (params.omega0 * params.c_sum)


@dataclass(frozen=True)
class HarmonicComponent:
    """One spectral line: order k (1 = fundamental), peak amplitude, phase in degrees."""

    k: int
    amplitude: float
    phase_deg: float = 0.0

    def __post_init__(self):
        if not (isinstance(self.k, int) and self.k >= 1):
            raise ValueError(f"harmonic order must be an integer >= 1, got {self.k}")
        if self.amplitude < 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")


@dataclass(frozen=True)
class FaultSource:
    """Fault excitation, in exactly one of two modes.

    injected : ``harmonics`` (analytic i_0f) or ``record``/``record_path``
        (sampled i_0f, channel "i_0f") prescribe the fault current directly.
    coupled : ``harmonics`` describe the virtual source u_f (fundamental plus
        optional harmonic content, e.g. from harmonic loads); ``series_r``
        lumps R_HIF + Z1 + Z2; ``arc`` is the nonlinear element. The fault
        current follows from i_0f = (u_f - u_0b) / (series_r + r_series + R_arc).
    """

    mode: str
    harmonics: tuple[HarmonicComponent, ...] = ()
    record: WaveformRecord | None = None
    record_path: str | None = None
    series_r: float = 0.0
    arc: ArcParameters | None = None
    ramp_cycles: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "harmonics", tuple(self.harmonics))
        if self.mode not in ("injected", "coupled"):
            raise ValueError(f"mode must be 'injected' or 'coupled', got '{self.mode}'")
        if self.series_r < 0:
            raise ValueError(f"series_r must be >= 0, got {self.series_r}")
        if self.ramp_cycles < 0:
            raise ValueError(f"ramp_cycles must be >= 0, got {self.ramp_cycles}")
        ks = [h.k for h in self.harmonics]
        if len(set(ks)) != len(ks):
            raise ValueError(f"duplicate harmonic orders in source: {ks}")
        has_rec = self.record is not None or self.record_path is not None
        if self.mode == "injected":
            if self.arc is not None:
                raise ValueError("injected mode takes no arc parameters")
            if bool(self.harmonics) == has_rec:
                raise ValueError("injected mode needs exactly one of harmonics or a record")
        else:
            if self.arc is None:
                raise ValueError("coupled mode requires arc parameters")
            if has_rec:
                raise ValueError("coupled mode takes no injected record")
            if not self.harmonics:
                raise ValueError("coupled mode requires u_f harmonic content")

    @classmethod
    def injected_harmonics(cls, components) -> "FaultSource":
        return cls(mode="injected", harmonics=tuple(components))

    @classmethod
    def injected_record(cls, record: WaveformRecord) -> "FaultSource":
        return cls(mode="injected", record=record)

    @classmethod
    def coupled(cls, amplitude: float, phase_deg: float = 0.0, *, series_r: float,
                arc: ArcParameters, extra_harmonics=(),
                ramp_cycles: float = 0.0) -> "FaultSource":
        comps = (HarmonicComponent(1, amplitude, phase_deg), *extra_harmonics)
        return cls(mode="coupled", harmonics=comps, series_r=series_r, arc=arc,
                   ramp_cycles=ramp_cycles)

    def has_fundamental(self) -> bool:
        return any(h.k == 1 and h.amplitude > 0 for h in self.harmonics)


def _harmonics_eval(harmonics, omega0: float, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    for h in harmonics:
        out += h.amplitude * np.sin(h.k * omega0 * t + math.radians(h.phase_deg))
    return out


def _half_grid(n_out: int, fs: float) -> tuple[np.ndarray, float]:
    h = 1.0 / (OVERSAMPLE * fs)
    t_half = np.arange(2 * OVERSAMPLE * (n_out - 1) + 1) * (0.5 * h)
    return t_half, h


def _injected_half_values(source: FaultSource, params: NetworkParameters,
                          t_half: np.ndarray, fs: float) -> np.ndarray:
    if source.harmonics:
        return _harmonics_eval(source.harmonics, params.omega0, t_half)
    record = source.record
    if record is None:
        raise ConfigurationError("record-mode source has no loaded record; load it first")
    if abs(record.fs - fs) > 1e-6 * fs:
        raise ConfigurationError(
            f"injected record sample rate {record.fs} Hz must match simulation fs {fs} Hz"
        )
    if "i_0f" not in record.channels:
        raise ConfigurationError("injected record must contain channel 'i_0f'")
    tmax = t_half[-1]
    if record.duration < tmax - 1e-12:
        raise ConfigurationError(
            f"injected record spans {record.duration:.6g} s but {tmax:.6g} s are needed"
        )
    rel_t = record.t - record.t0
    spline = CubicSpline(rel_t, record.channel("i_0f"))
    return spline(np.minimum(t_half, rel_t[-1]))


def _check_sampling(params: NetworkParameters, fs: float) -> int:
    ratio = fs / params.f0
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise ConfigurationError(f"fs/f0 must be a positive integer, got {fs}/{params.f0}")
    return int(round(ratio))


def _periodic_initial_state(params: NetworkParameters, source: FaultSource,
                            fs: float) -> tuple[float, float]:
    """Initial (i_0L, u_0b) on the periodic steady-state orbit.

    Runs the discrete integrator over one fundamental period three times --
    once with the input from zero state, twice input-free from unit states
    to build the monodromy matrix -- and solves the 2x2 fixed-point system.
    Exact for the discrete dynamics, so the result stays an oracle
    independent of the closed-form transfer theory.
    """
    n_per = _check_sampling(params, fs)
    n_out = n_per + 1
    t_half, h = _half_grid(n_out, fs)
    drive = _harmonics_eval(source.harmonics, params.omega0, t_half)
    zeros = np.zeros_like(t_half)
    args = (n_out, OVERSAMPLE, h, params.coil_l, params.c_sum, params.g_sum)

    il_d, ub_d = net_injected_rk4(drive, *args, 0.0, 0.0)
    il_a, ub_a = net_injected_rk4(zeros, *args, 1.0, 0.0)
    il_b, ub_b = net_injected_rk4(zeros, *args, 0.0, 1.0)
    phi = np.array([[il_a[-1], il_b[-1]], [ub_a[-1], ub_b[-1]]])
    rhs = np.array([il_d[-1], ub_d[-1]])
    mat = np.eye(2) - phi
    if abs(np.linalg.det(mat)) < 1e-12:
        raise SingularNetworkError(
            "network natural frequency coincides with a drive harmonic; "
            "no unique periodic steady state"
        )
    x0 = np.linalg.solve(mat, rhs)
    return float(x0[0]), float(x0[1])


def simulate_zero_sequence(params: NetworkParameters, source: FaultSource,
                           duration: float, fs: float,
                           init: str = "zero") -> WaveformRecord:
    """Integrate the zero-sequence circuit and return all measured channels.

    Channels: ``i_0f``, ``u_0b``, ``i_0N`` (coil path), one ``i_0<name>``
    per feeder, and ``r_arc`` in coupled mode. All channels share one time
    base starting at t = 0 and satisfy KCL pointwise.

    ``init='zero'`` starts from rest (u_0b = i_0L = 0). ``init='periodic'``
    (injected harmonic sources only) starts on the periodic steady-state
    orbit, which is the only way to reach steady state in a lossless
    network whose transient never decays.
    """
    _check_sampling(params, fs)
    v = detuning_index(params)
    d = damping_ratio(params)
    if d == 0.0 and abs(v) < 1e-12 and source.has_fundamental():
        raise SingularNetworkError(
            "lossless network at exact resonance driven at the fundamental diverges"
        )
    n_out = int(round(duration * fs))
    if n_out < 2:
        raise ConfigurationError(f"duration {duration} s too short at fs={fs}")
    t_half, h = _half_grid(n_out, fs)

    if init not in ("zero", "periodic"):
        raise ValueError(f"init must be 'zero' or 'periodic', got '{init}'")
    if init == "periodic" and (source.mode != "injected" or not source.harmonics):
        raise ConfigurationError("init='periodic' requires an injected harmonic source")

    if source.mode == "injected":
        if_half = _injected_half_values(source, params, t_half, fs)
        il0 = ub0 = 0.0
        if init == "periodic":
            il0, ub0 = _periodic_initial_state(params, source, fs)
        il, ub = net_injected_rk4(if_half, n_out, OVERSAMPLE, h, params.coil_l,
                                  params.c_sum, params.g_sum, il0, ub0)
        i0f = if_half[::2 * OVERSAMPLE].copy()
        r_arc = None
    else:
        arc = source.arc
        uf_half = _harmonics_eval(source.harmonics, params.omega0, t_half)
        if source.ramp_cycles > 0:
            # Soft switch-in over the first cycles: a raised-cosine envelope
            # mirrors gradual fault development and avoids slamming the
            # (possibly undamped) tank with a step that rings forever.
            t_ramp = source.ramp_cycles / params.f0
            env = np.ones_like(t_half)
            mask = t_half < t_ramp
            env[mask] = 0.5 * (1.0 - np.cos(np.pi * t_half[mask] / t_ramp))
            uf_half = uf_half * env
        r_lin = source.series_r + arc.r_series
        i0f, il, ub, r_arc = net_coupled_rk4(
            uf_half, n_out, OVERSAMPLE, h, params.coil_l, params.c_sum,
            params.g_sum, r_lin, arc.p_loss, arc.tau,
            math.log(arc.r_arc_init), math.log(R_ARC_FLOOR), math.log(R_ARC_CEILING),
        )

    du = (i0f - il - ub * params.g_sum) / params.c_sum
    channels: dict[str, np.ndarray] = {
        "i_0f": i0f,
        "u_0b": ub,
        "i_0N": il + ub * params.g_coil,
    }
    g_feeders = params.g_feeders
    for j, feeder in enumerate(params.feeders):
        shunt = feeder.c0 * du + ub * g_feeders[j]
        if j == params.faulty_index:
            channels[f"i_0{feeder.name}"] = shunt - i0f
        else:
            channels[f"i_0{feeder.name}"] = shunt
    if r_arc is not None:
        channels["r_arc"] = r_arc
    return WaveformRecord(fs=fs, channels=channels)


def feeder_channel(name: str) -> str:
    """Channel name carrying the zero-sequence current of feeder ``name``."""
    return f"i_0{name}"
