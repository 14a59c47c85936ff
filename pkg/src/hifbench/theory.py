"""Closed-form harmonic transfer from the fault current to every feeder.

For harmonic order k define

    v_k = 1 - (1 - v) / k^2      (per-harmonic detuning)
    d_k = d / k                  (per-harmonic damping)

with v the detuning index and d the damping ratio of the network. Each
feeder's k-th harmonic current equals the fault current's k-th component
multiplied by a gain and rotated counterclockwise by a fixed angle; the
(gain, rotation) pairs depend only on (v, d, capacitance share, loss
shares), never on the fault current itself, which is what makes the
identification indicator immune to the fault's own distortion diversity.

The damped forms implement the branch-arctan expressions literally (a pi
offset selected by the sign of the denominator, then wrapped); the lossless
forms are the exact d = 0 expressions. The substation expression carries an
explicit sign flip which is folded into the reported rotation so that every
gain is nonnegative.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .angles import wrap_deg_scalar
from .errors import EstimationError, SingularNetworkError
from .network import NetworkParameters, damping_ratio, detuning_index, feeder_channel
from .phasors import DecompositionResult, PhasorSet
from .waveform import WaveformRecord

ROLE_FAULTY = "faulty"
ROLE_HEALTHY = "healthy"
ROLE_SUBSTATION = "substation"

#: Harmonic cap of the theory; orders above this contribute negligibly.
MAX_HARMONIC = 11


@dataclass(frozen=True)
class HarmonicTransfer:
    """Gain and counterclockwise rotation (degrees, wrapped to (-180, 180])
    applied to the fault current's k-th component to obtain a feeder current."""

    role: str
    k: int
    gain: float
    rotation_deg: float


@dataclass(frozen=True)
class LosslessCoefficients:
    """Positive constants of the lossless feeder expressions at one order k.

    p1/p2 belong to the faulty feeder, p3/p4 (keyed by feeder name) to each
    healthy feeder, p5/p6 to the substation path. ``harmonic_gain_factor``
    is (1 - k^2) / (1 - k^2 * s) with s = w0^2 * L * C_sum; it vanishes at
    k = 1 where the harmonic terms drop out.
    """

    k: int
    p1: float
    p2: float
    p3: dict[str, float]
    p4: dict[str, float]
    p5: float
    p6: float
    harmonic_gain_factor: float


@dataclass(frozen=True)
class FeederTransfers:
    """Transfers of every role at one harmonic order."""

    k: int
    faulty: HarmonicTransfer
    healthy: dict[str, HarmonicTransfer]
    substation: HarmonicTransfer


@dataclass(frozen=True)
class NetworkEstimate:
    """Network parameters recovered from steady-state fundamental phasors."""

    v: float
    d: float
    r_coil: float
    r_feeders: dict[str, float]


def harmonic_gain_factor(k: int, s: float) -> float:
    """(1 - k^2) / (1 - k^2 * s) for s = w0^2 * L * C_sum in (0, 1)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not (0.0 < s < 1.0):
        raise ValueError(f"s must lie in (0, 1), got {s}")
    denom = 1.0 - k * k * s
    if denom == 0.0:
        raise SingularNetworkError(f"harmonic gain factor pole at k={k}, s={s}")
    return (1.0 - k * k) / denom


def _vk_dk(v: float, d: float, k: int) -> tuple[float, float]:
    if k == 1:
        return v, d
    return 1.0 - (1.0 - v) / (k * k), d / k


def _branch_deg(num: float, den: float, add_pi: bool) -> float:
    """arctan(num/den) plus an optional pi offset, in degrees.

    At den == 0 both branch limits coincide at sign(num)*90 (the arctan
    argument diverges), so the pi offset must not be applied there; this is
    what makes the branches join continuously.
    """
    if den == 0.0:
        return math.copysign(90.0, num) if num != 0.0 else 0.0
    base = math.degrees(math.atan(num / den))
    return base + (180.0 if add_pi else 0.0)


def damped_transfer(v: float, d: float, k: int, role: str, c: float = 0.0,
                    r_feeder: float = 0.0, r_coil: float = 1.0) -> HarmonicTransfer:
    """Damped-network transfer for one role at harmonic order k.

    ``c`` is the feeder's capacitance share (c_i or c_n; unused for the
    substation role). ``r_feeder`` is R_sum/R_0 of the feeder at hand,
    ``r_coil`` is R_sum/R of the coil path.
    """
    if v * v + d * d == 0.0:
        raise SingularNetworkError("v = 0 with d = 0 has no finite transfer")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    vk, dk = _vk_dk(v, d, k)
    if vk * vk + dk * dk == 0.0:
        raise SingularNetworkError(f"singular operating point at harmonic k={k}")
    denom = math.sqrt(vk * vk + dk * dk)

    if role == ROLE_HEALTHY:
        gain = math.sqrt((r_feeder * dk) ** 2 + c * c) / denom
        num = c * dk - r_feeder * dk * vk
        den = c * vk + r_feeder * dk * dk
        rot = _branch_deg(num, den, add_pi=den <= 0.0)
    elif role == ROLE_FAULTY:
        gain = math.sqrt((c - vk) ** 2 + dk * dk * (r_feeder - 1.0) ** 2) / denom
        num = dk * c - r_feeder * dk * vk
        den = c * vk - vk * vk - (1.0 - r_feeder) * dk * dk
        rot = _branch_deg(num, den, add_pi=den <= 0.0)
    elif role == ROLE_SUBSTATION:
        gain = math.sqrt((1.0 - vk) ** 2 + (r_coil * dk) ** 2) / denom
        num = dk * (1.0 - vk) + r_coil * dk * vk
        den = vk * (1.0 - vk) - r_coil * dk * dk
        # The printed form carries a -1 prefactor; fold it into the angle.
        rot = _branch_deg(num, den, add_pi=den <= 0.0) + 180.0
    else:
        raise ValueError(f"unknown role '{role}'")
    return HarmonicTransfer(role=role, k=k, gain=gain,
                            rotation_deg=wrap_deg_scalar(rot))


def lossless_transfer(params: NetworkParameters, k: int
                      ) -> tuple[FeederTransfers, LosslessCoefficients]:
    """Exact lossless (d = 0) transfers of every role at order k, plus the
    positive constants of the corresponding feeder expressions."""
    v = detuning_index(params)
    if v == 0.0:
        raise SingularNetworkError("v = 0: lossless resonance pole")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    s = params.omega0 ** 2 * params.coil_l * params.c_sum
    ratios = params.c_ratios
    c_n = float(ratios[params.faulty_index])
    vk, _ = _vk_dk(v, 0.0, k)

    def polar(coeff: float, role: str) -> HarmonicTransfer:
        gain = abs(coeff)
        rot = 180.0 if coeff < 0 else 0.0
        return HarmonicTransfer(role=role, k=k, gain=gain, rotation_deg=rot)

    if k == 1:
        faulty = polar((v - c_n) / (-v), ROLE_FAULTY)          # = -(c_n - v)/(-v)
        healthy = {
            f.name: polar(-float(ratios[j]) / (-v), ROLE_HEALTHY)
            for j, f in enumerate(params.feeders) if j != params.faulty_index
        }
        substation = polar((1.0 - v) / (-v), ROLE_SUBSTATION)
        hgf = 0.0
    else:
        faulty = polar((c_n - vk) / vk, ROLE_FAULTY)
        healthy = {
            f.name: polar(float(ratios[j]) / vk, ROLE_HEALTHY)
            for j, f in enumerate(params.feeders) if j != params.faulty_index
        }
        substation = polar(-(1.0 - vk) / vk, ROLE_SUBSTATION)
        hgf = harmonic_gain_factor(k, s)

    coeffs = LosslessCoefficients(
        k=k,
        p1=-v + c_n,
        p2=c_n * hgf,
        p3={f.name: float(ratios[j]) for j, f in enumerate(params.feeders)
            if j != params.faulty_index},
        p4={f.name: float(ratios[j]) * hgf for j, f in enumerate(params.feeders)
            if j != params.faulty_index},
        p5=1.0 - v,
        p6=hgf,
        harmonic_gain_factor=hgf,
    )
    return FeederTransfers(k=k, faulty=faulty, healthy=healthy,
                           substation=substation), coeffs


def network_transfers(params: NetworkParameters, k: int) -> FeederTransfers:
    """Damped transfers of every role at order k, from physical parameters."""
    v = detuning_index(params)
    d = damping_ratio(params)
    r_coil, r_feeders = params.r_ratios()
    ratios = params.c_ratios
    n = params.faulty_index
    faulty = damped_transfer(v, d, k, ROLE_FAULTY, c=float(ratios[n]),
                             r_feeder=float(r_feeders[n]), r_coil=r_coil)
    healthy = {
        f.name: damped_transfer(v, d, k, ROLE_HEALTHY, c=float(ratios[j]),
                                r_feeder=float(r_feeders[j]), r_coil=r_coil)
        for j, f in enumerate(params.feeders) if j != n
    }
    substation = damped_transfer(v, d, k, ROLE_SUBSTATION, r_coil=r_coil)
    return FeederTransfers(k=k, faulty=faulty, healthy=healthy, substation=substation)


def midpoint_gain_factor(s: float) -> float:
    """Constant simplification of the harmonic gain factor: the midpoint of
    its k >= 2 range, (1/s + 3/(4s - 1)) / 2."""
    if not (0.25 < s < 1.0):
        raise ValueError(f"s must lie in (0.25, 1) for the midpoint constant, got {s}")
    return 0.5 * (1.0 / s + 3.0 / (4.0 * s - 1.0))


def predict_feeder_waveforms(fault_dec: DecompositionResult,
                             params: NetworkParameters,
                             method: str = "damped") -> WaveformRecord:
    """Theoretical feeder and substation currents from the decomposed fault
    current.

    method='damped' rotates and scales every harmonic component with the
    damped transfers. method='lossless' follows the uncalibrated procedure:
    the constant (midpoint) harmonic gain factor replaces the per-order one
    and the network is treated as lossless, which is expected to misfit
    noticeably damped networks.
    """
    ps = fault_dec.phasors
    ks = [k for k in ps.orders if ps.amplitude(k) > 0 or k == 1]
    if max(ks) > MAX_HARMONIC:
        raise ValueError(f"decomposition carries k={max(ks)} > {MAX_HARMONIC}")
    (src_name,) = fault_dec.sinusoidal.names
    rec = fault_dec.sinusoidal
    tt = np.arange(rec.n_samples) / rec.fs
    omega0 = 2.0 * math.pi * ps.f0

    names = [feeder_channel(f.name) for f in params.feeders] + ["i_0N"]
    waves = {name: np.zeros_like(tt) for name in names}

    if method == "damped":
        for k in ks:
            tr = network_transfers(params, k)
            a = ps.amplitude(k)
            if a == 0.0:
                continue
            phi = math.radians(ps.phase_deg(k))
            for j, f in enumerate(params.feeders):
                ht = tr.faulty if j == params.faulty_index else tr.healthy[f.name]
                rot = math.radians(ht.rotation_deg)
                waves[feeder_channel(f.name)] += ht.gain * a * np.sin(k * omega0 * tt + phi + rot)
            rot = math.radians(tr.substation.rotation_deg)
            waves["i_0N"] += tr.substation.gain * a * np.sin(k * omega0 * tt + phi + rot)
    elif method == "lossless":
        v = detuning_index(params)
        if v == 0.0:
            raise SingularNetworkError("v = 0: lossless resonance pole")
        s = params.omega0 ** 2 * params.coil_l * params.c_sum
        hgf = midpoint_gain_factor(s)
        ratios = params.c_ratios
        c_n = float(ratios[params.faulty_index])
        sinu = fault_dec.sinusoidal.channel(src_name)
        dist = fault_dec.distortional.channel(src_name)
        i0f = sinu + dist
        for j, f in enumerate(params.feeders):
            c = float(ratios[j])
            if j == params.faulty_index:
                waves[feeder_channel(f.name)] = ((-v + c_n) * (-i0f) + c_n * hgf * dist) / (-v)
            else:
                waves[feeder_channel(f.name)] = (c * (-i0f) + c * hgf * dist) / (-v)
        waves["i_0N"] = ((1.0 - v) * i0f - hgf * dist) / (-v)
    else:
        raise ValueError(f"unknown prediction method '{method}'")

    return WaveformRecord(fs=rec.fs, channels=waves, t0=rec.t0)


def _phasor_complex(ps: PhasorSet, k: int = 1) -> complex:
    return ps.amplitude(k) * cmath.exp(1j * math.radians(ps.phase_deg(k)))


def estimate_network_parameters(u0b: PhasorSet, healthy: dict[str, PhasorSet],
                                substation: PhasorSet, c_n: float,
                                u0b_floor: float = 1e-9) -> NetworkEstimate:
    """Recover (v, d, loss shares) from synchronized fundamental phasors.

    Projects each healthy feeder's fundamental onto the capacitive axis
    (u_0b phase + 90 deg) and the resistive axis (u_0b phase), and the
    substation fundamental onto the inductive (-90 deg) and resistive axes.
    The faulty feeder's own capacitive amplitude is reconstructed from its
    known share ``c_n``; its leakage current is unobservable behind the
    fault current and is taken as zero.
    """
    if not healthy:
        raise EstimationError("need at least one healthy feeder phasor set")
    if not (0.0 < c_n < 1.0):
        raise ValueError(f"c_n must lie in (0, 1), got {c_n}")
    if u0b.amplitude(1) < u0b_floor:
        raise EstimationError(
            f"u_0b fundamental amplitude {u0b.amplitude(1):.3g} below the "
            f"{u0b_floor:.3g} gate; phases are meaningless"
        )
    ref = cmath.exp(-1j * math.radians(u0b.phase_deg(1)))
    a_mc: dict[str, float] = {}
    a_mr: dict[str, float] = {}
    for name, ps in healthy.items():
        w = _phasor_complex(ps) * ref
        a_mc[name] = w.imag
        a_mr[name] = max(w.real, 0.0)
    w_n = _phasor_complex(substation) * ref
    a_ml = -w_n.imag
    a_mr_coil = max(w_n.real, 0.0)

    sum_mc_healthy = sum(a_mc.values())
    if sum_mc_healthy <= 0:
        raise EstimationError("healthy feeders show no capacitive current; cannot scale")
    sum_mc_all = sum_mc_healthy / (1.0 - c_n)
    v = 1.0 - a_ml / sum_mc_all
    resistive_total = a_mr_coil + sum(a_mr.values())
    d = resistive_total / sum_mc_all
    if resistive_total <= 1e-12 * sum_mc_all:
        # Effectively lossless: the shares are immaterial; report the
        # coil-only convention.
        return NetworkEstimate(v=v, d=d, r_coil=1.0,
                               r_feeders={name: 0.0 for name in healthy})
    return NetworkEstimate(
        v=v, d=d, r_coil=a_mr_coil / resistive_total,
        r_feeders={name: a_mr[name] / resistive_total for name in healthy},
    )
