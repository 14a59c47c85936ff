import numpy as np
import pytest

from hifbench.network import (FaultSource, HarmonicComponent,
                              NetworkParameters, feeder_channel,
                              simulate_zero_sequence)
from hifbench.phasors import window_phasors
from hifbench.theory import ROLE_FAULTY, ROLE_HEALTHY, ROLE_SUBSTATION

# Feeder lengths (km) of the four-feeder study system; capacitances are
# proportional to them.
FIG4_LENGTHS = np.array([13.3, 10.8, 10.8, 24.7])
C_TOTAL = 1.0e-4
F0 = 50.0
FS = 6400.0
UF_PEAK = 10e3 * np.sqrt(2.0 / 3.0)


def fig4_c0s(c_total: float = C_TOTAL) -> np.ndarray:
    return FIG4_LENGTHS / FIG4_LENGTHS.sum() * c_total


def make_network(v: float, d: float, faulty_index: int = 1,
                 r0s=None, c_total: float = C_TOTAL) -> NetworkParameters:
    return NetworkParameters.from_targets(
        F0, fig4_c0s(c_total), v=v, d=d, faulty_index=faulty_index, r0s=r0s)


@pytest.fixture(scope="session")
def network_vm05_d02() -> NetworkParameters:
    return make_network(-0.05, 0.2)


def measure_transfers(params: NetworkParameters, k_max: int = 11):
    """Independent oracle: per-role simulated (gain, rotation) for every
    harmonic order, from a periodic-steady-state time-domain run driven by
    an injected multi-harmonic fault current."""
    comps = [HarmonicComponent(1, 1.0, 10.0)]
    comps += [HarmonicComponent(k, 0.5 / k, 17.0 * k) for k in range(2, k_max + 1)]
    src = FaultSource.injected_harmonics(comps)
    rec = simulate_zero_sequence(params, src, 4 / params.f0, FS, init="periodic")
    t0 = 2 / params.f0
    ps_f = window_phasors(rec, "i_0f", t0, params.f0, k_max)
    out = {}
    for j, f in enumerate(params.feeders):
        role = ROLE_FAULTY if j == params.faulty_index else ROLE_HEALTHY
        ps = window_phasors(rec, feeder_channel(f.name), t0, params.f0, k_max)
        out[f.name] = (role, ps, ps_f)
    out["__substation__"] = (ROLE_SUBSTATION,
                             window_phasors(rec, "i_0N", t0, params.f0, k_max), ps_f)
    return out, rec

