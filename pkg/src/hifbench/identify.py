"""Faulty-feeder identification from 3rd-harmonic phase differences.

The indicator between feeders a and b is |wrap(phi_a - phi_b - 180 deg)|,
computed from synchronized same-window 3rd-harmonic phases. The faulty
feeder sits near 180 deg from every healthy feeder, so all of its
indicators stay below the threshold, while any two healthy feeders sit
near 0 deg apart and indicate ~180 deg. The classic single-feeder
criterion Delta_phi(I1-I3) = wrap(phi_3 - 3 * phi_1) is kept as the
comparison baseline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .angles import wrap_deg, wrap_deg_scalar
from .errors import ConfigurationError, SynchronizationError
from .phasors import PhasorSet
from .theory import ROLE_FAULTY, ROLE_HEALTHY, damped_transfer

THR_DEFAULT = 40.0
GATE_REL_DEFAULT = 0.005   # 3rd harmonic must reach 0.5% of the channel fundamental
GATE_ABS_DEFAULT = 0.01    # ... and an absolute floor (measuring scale), in signal units
K_CONSEC_DEFAULT = 5       # consecutive agreeing windows (2.5 cycles) for a verdict
UNDETERMINED = "undetermined"


def pairwise_indicator(phi_a_deg: float, phi_b_deg: float) -> float:
    """|wrap(phi_a - phi_b - 180)| in [0, 180]; symmetric in its arguments."""
    return abs(wrap_deg_scalar(phi_a_deg - phi_b_deg - 180.0))


@dataclass(frozen=True)
class WindowDecision:
    """Per-window indicator matrix (degrees, nan diagonal), amplitude-gate
    validity matrix, and the window's candidate feeder (None = undetermined)."""

    window_start: float
    indicator_deg: np.ndarray
    valid: np.ndarray
    verdict: int | None


@dataclass(frozen=True)
class IdentificationResult:
    feeders: tuple[str, ...]
    thr: float
    windows: tuple[WindowDecision, ...]
    aggregated_verdict: int | None

    @property
    def aggregated_name(self) -> str:
        if self.aggregated_verdict is None:
            return UNDETERMINED
        return self.feeders[self.aggregated_verdict]


def _window_decision(sets: Sequence[PhasorSet], thr: float, gate_rel: float,
                     gate_abs: float, harmonic: int) -> WindowDecision:
    n = len(sets)
    phases = np.array([ps.phase_deg(harmonic) for ps in sets])
    amp_h = np.array([ps.amplitude(harmonic) for ps in sets])
    amp_1 = np.array([ps.amplitude(1) for ps in sets])
    gate = amp_h >= np.maximum(gate_rel * amp_1, gate_abs)

    diff = phases[:, None] - phases[None, :]
    ind = np.abs(wrap_deg(diff - 180.0))
    np.fill_diagonal(ind, np.nan)
    valid = gate[:, None] & gate[None, :]
    np.fill_diagonal(valid, False)

    candidates = []
    for a in range(n):
        others = [b for b in range(n) if b != a]
        if all(valid[a, b] and ind[a, b] <= thr for b in others):
            candidates.append(a)
    verdict = candidates[0] if len(candidates) == 1 else None
    return WindowDecision(window_start=sets[0].window_start, indicator_deg=ind,
                          valid=valid, verdict=verdict)


def identify(streams: Mapping[str, Sequence[PhasorSet]], thr: float = THR_DEFAULT,
             gate_rel: float = GATE_REL_DEFAULT, gate_abs: float = GATE_ABS_DEFAULT,
             k_consec: int = K_CONSEC_DEFAULT, harmonic: int = 3) -> IdentificationResult:
    """Run the pairwise-indicator decision over synchronized phasor streams.

    ``streams`` maps feeder name -> sliding phasor stream; all streams must
    share window boundaries. Per window, feeder a is the candidate iff its
    indicator against *every* other feeder is <= thr and both 3rd-harmonic
    amplitudes pass the gate; no candidate or several leave the window
    undetermined. The aggregated verdict is the first feeder confirmed by
    ``k_consec`` consecutive agreeing windows.
    """
    names = tuple(streams)
    if len(names) < 2:
        raise ConfigurationError(f"need >= 2 feeders to identify, got {len(names)}")
    lengths = {len(streams[n]) for n in names}
    if len(lengths) != 1:
        raise SynchronizationError(f"streams have differing window counts: {sorted(lengths)}")
    n_win = lengths.pop()
    if n_win == 0:
        raise ConfigurationError("streams contain no windows")
    starts = np.array([[ps.window_start for ps in streams[n]] for n in names])
    if np.max(np.abs(starts - starts[0])) > 1e-12:
        raise SynchronizationError("streams are not on identical window boundaries")

    windows = [
        _window_decision([streams[n][j] for n in names], thr, gate_rel, gate_abs, harmonic)
        for j in range(n_win)
    ]

    aggregated: int | None = None
    run_verdict: int | None = None
    run_len = 0
    for w in windows:
        if w.verdict is not None and w.verdict == run_verdict:
            run_len += 1
        else:
            run_verdict = w.verdict
            run_len = 1 if w.verdict is not None else 0
        if run_verdict is not None and run_len >= k_consec:
            aggregated = run_verdict
            break
    return IdentificationResult(feeders=names, thr=thr, windows=tuple(windows),
                                aggregated_verdict=aggregated)


def classic_delta_phi(phasors: PhasorSet) -> float:
    """Classic fundamental-vs-3rd-harmonic phase difference.

    Returns wrap(phi_3 - 3 * phi_1) in (-180, 180]. The x3 on the
    fundamental makes the value invariant to window placement; the classic
    fault criterion is |Delta_phi - 180 deg| <= Thr evaluated mod 360.
    """
    for k in (1, 3):
        if k not in phasors.phasors:
            raise ValueError(f"classic_delta_phi needs harmonics 1 and 3, missing k={k}")
    return wrap_deg_scalar(phasors.phase_deg(3) - 3.0 * phasors.phase_deg(1))


def classic_criterion_met(delta_phi_deg: float, thr: float = THR_DEFAULT) -> bool:
    """|Delta_phi - 180 deg| <= thr, evaluated mod 360."""
    return abs(wrap_deg_scalar(delta_phi_deg - 180.0)) <= thr


@dataclass(frozen=True)
class EffectiveAreaMap:
    """Indicator values over a (v, d) grid with per-cell pass/fail.

    ``value_deg[iv, id]`` holds the proposed indicator (method='proposed')
    or the faulty feeder's classic deviation |wrap(Delta_phi - 180)|
    (method='classic'); ``healthy_value_deg`` carries the healthy feeder's
    deviation for the classic method. ``singular`` marks excluded v = 0
    columns.
    """

    method: str
    c_n: float
    v_grid: np.ndarray
    d_grid: np.ndarray
    value_deg: np.ndarray
    passed: np.ndarray
    singular: np.ndarray
    healthy_value_deg: np.ndarray | None = None


def default_v_grid(step: float = 0.005) -> np.ndarray:
    """v in [-0.1, 0) sampled every ``step``, excluding 0."""
    n = int(round(0.1 / step))
    return -0.1 + step * np.arange(n)


def default_d_grid(step: float = 0.01) -> np.ndarray:
    """d in [0, 0.5] sampled every ``step``."""
    n = int(round(0.5 / step)) + 1
    return step * np.arange(n)


def effective_area_map(c_n: float, v_grid=None, d_grid=None,
                       method: str = "proposed", thr: float = THR_DEFAULT,
                       r_feeder: float = 0.0, r_coil: float = 1.0) -> EffectiveAreaMap:
    """Evaluate the identification criterion over a (v, d) grid.

    method='proposed': per cell, the faulty/healthy 3rd-harmonic indicator;
    passes iff <= thr. method='classic': per cell, the classic deviations of
    the faulty and a healthy feeder (fault-point Delta_phi fixed at 180 deg,
    feeder leakage neglected by default); passes iff the faulty criterion
    holds *and* the healthy criterion fails. v = 0 cells are marked singular
    and excluded.
    """
    if method not in ("proposed", "classic"):
        raise ValueError(f"unknown map method '{method}'")
    v_grid = default_v_grid() if v_grid is None else np.asarray(v_grid, dtype=float)
    d_grid = default_d_grid() if d_grid is None else np.asarray(d_grid, dtype=float)
    nv, nd = v_grid.size, d_grid.size
    value = np.full((nv, nd), np.nan)
    healthy_value = np.full((nv, nd), np.nan) if method == "classic" else None
    passed = np.zeros((nv, nd), dtype=bool)
    singular = np.zeros((nv, nd), dtype=bool)

    for iv, v in enumerate(v_grid):
        for jd, d in enumerate(d_grid):
            if v == 0.0:
                singular[iv, jd] = True
                continue
            rot_n3 = damped_transfer(v, d, 3, ROLE_FAULTY, c=c_n,
                                     r_feeder=r_feeder, r_coil=r_coil).rotation_deg
            rot_i3 = damped_transfer(v, d, 3, ROLE_HEALTHY, c=1.0 - c_n,
                                     r_feeder=r_feeder, r_coil=r_coil).rotation_deg
            if method == "proposed":
                ind = pairwise_indicator(rot_n3, rot_i3)
                value[iv, jd] = ind
                passed[iv, jd] = ind <= thr
            else:
                rot_n1 = damped_transfer(v, d, 1, ROLE_FAULTY, c=c_n,
                                         r_feeder=r_feeder, r_coil=r_coil).rotation_deg
                rot_i1 = damped_transfer(v, d, 1, ROLE_HEALTHY, c=1.0 - c_n,
                                         r_feeder=r_feeder, r_coil=r_coil).rotation_deg
                # Delta_phi at the fault point fixed at 180 deg; each feeder's
                # Delta_phi deviates from 180 by (rot_3 - 3*rot_1) mod 360.
                dev_n = abs(wrap_deg_scalar(rot_n3 - 3.0 * rot_n1))
                dev_i = abs(wrap_deg_scalar(rot_i3 - 3.0 * rot_i1))
                value[iv, jd] = dev_n
                healthy_value[iv, jd] = dev_i
                passed[iv, jd] = (dev_n <= thr) and (dev_i > thr)
    return EffectiveAreaMap(method=method, c_n=c_n, v_grid=v_grid, d_grid=d_grid,
                            value_deg=value, passed=passed, singular=singular,
                            healthy_value_deg=healthy_value)
