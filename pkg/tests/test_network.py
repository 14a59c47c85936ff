import numpy as np
import pytest

from hifbench.angles import wrap_deg_scalar
from hifbench.arc import ArcParameters
from hifbench.errors import ConfigurationError, SingularNetworkError
from hifbench.network import (FaultSource, FeederSpec, HarmonicComponent,
                              NetworkParameters, damping_ratio,
                              detuning_index, feeder_channel,
                              simulate_zero_sequence)
from hifbench.phasors import window_phasors
from hifbench.waveform import WaveformRecord

from conftest import FS, F0, UF_PEAK, fig4_c0s, make_network


def kcl_residual(record, params):
    total = record.channel("i_0N").copy()
    for f in params.feeders:
        total += record.channel(feeder_channel(f.name))
    return np.max(np.abs(total))


class TestParameters:
    def test_detuning_index_perfect_resonance_rejected(self):
        # w0^2 L C >= 1 (v >= 0) violates the undercompensation invariant.
        omega0 = 2 * np.pi * 50.0
        c = fig4_c0s()
        coil_l = 1.01 / (omega0 ** 2 * c.sum())
        with pytest.raises(ValueError, match="undercompensated"):
            NetworkParameters(f0=50.0, feeders=tuple(
                FeederSpec(f"L{i}", c0) for i, c0 in enumerate(c)), coil_l=coil_l)

    def test_detuning_index_nominal_band_edge(self):
        # w0^2 L C = 0.9091 corresponds to v = -0.1.
        omega0 = 2 * np.pi * 50.0
        c = fig4_c0s()
        coil_l = 0.9091 / (omega0 ** 2 * c.sum())
        p = NetworkParameters(f0=50.0, feeders=tuple(
            FeederSpec(f"L{i}", c0) for i, c0 in enumerate(c)), coil_l=coil_l)
        assert detuning_index(p) == pytest.approx(-0.1, abs=1e-4)
        assert p.in_nominal_band

    def test_detuning_index_derived_value(self):
        # L chosen for w0^2 L C = 0.95 gives v = 1 - 1/0.95 = -0.052631...
        omega0 = 2 * np.pi * 50.0
        c_sum = 10e-6
        coil_l = 0.95 / (omega0 ** 2 * c_sum)
        p = NetworkParameters(f0=50.0, feeders=(
            FeederSpec("a", 0.4 * c_sum), FeederSpec("b", 0.6 * c_sum)), coil_l=coil_l)
        assert detuning_index(p) == pytest.approx(1 - 1 / 0.95, abs=1e-4)
        assert p.in_nominal_band

    def test_damping_ratio_lossless(self):
        p = make_network(-0.05, 0.0)
        assert damping_ratio(p) == 0.0
        assert p.coil_r is None

    def test_damping_ratio_coil_only(self):
        # R = 1/(w0 C 0.3) gives d = 0.3.
        omega0 = 2 * np.pi * 50.0
        c = fig4_c0s()
        p = NetworkParameters(
            f0=50.0,
            feeders=tuple(FeederSpec(f"L{i}", c0) for i, c0 in enumerate(c)),
            coil_l=0.95 / (omega0 ** 2 * c.sum()),
            coil_r=1.0 / (omega0 * c.sum() * 0.3),
        )
        assert damping_ratio(p) == pytest.approx(0.3, abs=1e-6)

    @pytest.mark.parametrize("d", [0.0, 0.1, 0.25, 0.5])
    def test_from_targets_reaches_requested_point(self, d):
        p = make_network(-0.07, d)
        assert detuning_index(p) == pytest.approx(-0.07, rel=1e-12)
        assert damping_ratio(p) == pytest.approx(d, rel=1e-12, abs=1e-15)

    def test_from_targets_with_feeder_leakage(self):
        omega0 = 2 * np.pi * 50.0
        c = fig4_c0s()
        r0 = 1.0 / (0.05 * omega0 * c.sum())  # feeder share of d is 0.05
        p = NetworkParameters.from_targets(50.0, c, v=-0.05, d=0.2,
                                           faulty_index=1, r0s=[r0, None, None, None])
        assert damping_ratio(p) == pytest.approx(0.2, rel=1e-12)
        r_coil, r_feeders = p.r_ratios()
        assert r_coil == pytest.approx(0.75, rel=1e-9)
        assert r_feeders[0] == pytest.approx(0.25, rel=1e-9)

    def test_from_targets_leakage_exceeding_target_rejected(self):
        omega0 = 2 * np.pi * 50.0
        c = fig4_c0s()
        r0 = 1.0 / (0.3 * omega0 * c.sum())
        with pytest.raises(ConfigurationError, match="cannot realize"):
            NetworkParameters.from_targets(50.0, c, v=-0.05, d=0.1,
                                           faulty_index=0, r0s=[r0, None, None, None])

    def test_needs_two_feeders(self):
        with pytest.raises(ValueError, match="2 feeders"):
            NetworkParameters(f0=50.0, feeders=(FeederSpec("a", 1e-5),), coil_l=1.0)


class TestSimulate:
    def test_zero_injection_zero_everywhere(self):
        p = make_network(-0.05, 0.2)
        src = FaultSource.injected_harmonics([HarmonicComponent(1, 0.0)])
        rec = simulate_zero_sequence(p, src, 0.1, FS)
        for name in rec.names:
            assert np.all(rec.channel(name) == 0.0)

    def test_sampling_must_divide(self):
        p = make_network(-0.05, 0.2)
        src = FaultSource.injected_harmonics([HarmonicComponent(1, 1.0)])
        with pytest.raises(ConfigurationError, match="integer"):
            simulate_zero_sequence(p, src, 0.1, 6403.0)

    def test_kcl_injected(self):
        p = make_network(-0.05, 0.2)
        src = FaultSource.injected_harmonics(
            [HarmonicComponent(1, 1.0), HarmonicComponent(3, 0.4, 25.0)])
        rec = simulate_zero_sequence(p, src, 0.2, FS)
        peak = np.max(np.abs(rec.channel("i_0f")))
        assert kcl_residual(rec, p) <= 1e-6 * peak

    def test_kcl_coupled(self):
        p = make_network(-0.05, 0.2)
        src = FaultSource.coupled(UF_PEAK, series_r=600.0,
                                  arc=ArcParameters(4000.0, 6.0, 600.0, r_arc_init=500.0))
        rec = simulate_zero_sequence(p, src, 0.5, FS)
        peak = np.max(np.abs(rec.channel("i_0f")))
        assert kcl_residual(rec, p) <= 1e-6 * peak
        assert "r_arc" in rec.channels

    def test_lossless_fundamental_ratio(self):
        # Steady-state faulty/fault amplitude ratio (c_n - v)/(-v) at
        # v = -0.1, c_n = 0.2 equals 3.0.
        c0s = [2e-6, 2e-6, 4e-6, 2e-6]  # c_n = 0.2 on feeder 0
        p = NetworkParameters.from_targets(50.0, c0s, v=-0.1, d=0.0, faulty_index=0)
        src = FaultSource.injected_harmonics([HarmonicComponent(1, 1.0)])
        rec = simulate_zero_sequence(p, src, 4 / F0, FS, init="periodic")
        ps_f = window_phasors(rec, "i_0f", 2 / F0, F0, 3)
        ps_n = window_phasors(rec, feeder_channel("L1"), 2 / F0, F0, 3)
        assert ps_n.amplitude(1) / ps_f.amplitude(1) == pytest.approx(3.0, rel=0.01)

    def test_lossless_fundamental_ratio_set(self):
        # The three peak-amplitude ratios of the lossless fundamental
        # balance, all referenced to the fault-current amplitude:
        #   coil current          A_ML / A_f          = 1 - 1/v
        #   healthy feeder        A_MC0i / A_f        = c_i / (-v)
        #   coil minus healthy    (A_ML - sum) / A_f  = 1 - c_n/v
        v = -0.1
        p = make_network(v, 0.0, faulty_index=1)
        ratios = p.c_ratios
        src = FaultSource.injected_harmonics([HarmonicComponent(1, 1.0)])
        rec = simulate_zero_sequence(p, src, 4 / F0, FS, init="periodic")
        a_f = window_phasors(rec, "i_0f", 2 / F0, F0, 2).amplitude(1)
        a_ml = window_phasors(rec, "i_0N", 2 / F0, F0, 2).amplitude(1)
        assert a_ml / a_f == pytest.approx(1 - 1 / v, rel=0.01)
        healthy_sum = 0.0
        for j, f in enumerate(p.feeders):
            if j == p.faulty_index:
                continue
            a_i = window_phasors(rec, feeder_channel(f.name), 2 / F0, F0, 2).amplitude(1)
            assert a_i / a_f == pytest.approx(ratios[j] / (-v), rel=0.01)
            healthy_sum += a_i
        c_n = ratios[p.faulty_index]
        assert (a_ml - healthy_sum) / a_f == pytest.approx(1 - c_n / v, rel=0.01)

    def test_lossless_third_harmonic_antiphase(self):
        c0s = [2e-6, 2e-6, 4e-6, 2e-6]
        p = NetworkParameters.from_targets(50.0, c0s, v=-0.1, d=0.0, faulty_index=0)
        src = FaultSource.injected_harmonics(
            [HarmonicComponent(1, 1.0), HarmonicComponent(3, 0.3, 40.0)])
        rec = simulate_zero_sequence(p, src, 4 / F0, FS, init="periodic")
        ps_n = window_phasors(rec, feeder_channel("L1"), 2 / F0, F0, 3)
        ps_h = window_phasors(rec, feeder_channel("L2"), 2 / F0, F0, 3)
        diff = abs(wrap_deg_scalar(ps_n.phase_deg(3) - ps_h.phase_deg(3)))
        assert diff == pytest.approx(180.0, abs=1.0)

    def test_superposition_in_injected_mode(self):
        p = make_network(-0.05, 0.1)
        s1 = FaultSource.injected_harmonics([HarmonicComponent(1, 1.0, 12.0)])
        s3 = FaultSource.injected_harmonics([HarmonicComponent(3, 0.5, -45.0)])
        both = FaultSource.injected_harmonics(
            [HarmonicComponent(1, 1.0, 12.0), HarmonicComponent(3, 0.5, -45.0)])
        r1 = simulate_zero_sequence(p, s1, 0.2, FS)
        r3 = simulate_zero_sequence(p, s3, 0.2, FS)
        rb = simulate_zero_sequence(p, both, 0.2, FS)
        for name in rb.names:
            lin = r1.channel(name) + r3.channel(name)
            scale = max(np.max(np.abs(rb.channel(name))), 1e-30)
            assert np.max(np.abs(lin - rb.channel(name))) <= 1e-9 * scale

    def test_periodic_init_is_immediately_stationary(self):
        p = make_network(-0.05, 0.0)
        src = FaultSource.injected_harmonics(
            [HarmonicComponent(1, 1.0), HarmonicComponent(5, 0.2, 70.0)])
        rec = simulate_zero_sequence(p, src, 6 / F0, FS, init="periodic")
        n_cyc = int(FS / F0)
        x = rec.channel("u_0b")
        first, last = x[:n_cyc], x[-n_cyc:]
        assert np.max(np.abs(first - last)) <= 1e-6 * np.max(np.abs(x))

    def test_singular_resonance_guard(self):
        # v == 0 networks cannot even be constructed; the simulate-time
        # guard covers v numerically indistinguishable from zero.
        omega0 = 2 * np.pi * 50.0
        c = fig4_c0s()
        coil_l = (1.0 - 1e-15) / (omega0 ** 2 * c.sum())
        p = NetworkParameters(f0=50.0, feeders=tuple(
            FeederSpec(f"L{i}", c0) for i, c0 in enumerate(c)), coil_l=coil_l)
        src = FaultSource.injected_harmonics([HarmonicComponent(1, 1.0)])
        with pytest.raises(SingularNetworkError):
            simulate_zero_sequence(p, src, 0.1, FS)

    def test_injected_record_matches_harmonics(self):
        # Feeding the same fault current as samples instead of analytically
        # reproduces the response closely (cubic interpolation error only).
        p = make_network(-0.05, 0.2)
        comps = [HarmonicComponent(1, 1.0, 5.0), HarmonicComponent(3, 0.3, 60.0)]
        src_a = FaultSource.injected_harmonics(comps)
        rec_a = simulate_zero_sequence(p, src_a, 0.3, FS)
        t = np.arange(int(0.3 * FS)) / FS
        i0f = np.zeros_like(t)
        for h in comps:
            i0f += h.amplitude * np.sin(h.k * 2 * np.pi * F0 * t + np.radians(h.phase_deg))
        src_b = FaultSource.injected_record(
            WaveformRecord(fs=FS, channels={"i_0f": i0f}))
        rec_b = simulate_zero_sequence(p, src_b, 0.3, FS)
        for name in rec_a.names:
            scale = max(np.max(np.abs(rec_a.channel(name))), 1e-30)
            assert np.max(np.abs(rec_a.channel(name) - rec_b.channel(name))) < 1e-5 * scale


class TestFaultSource:
    def test_mode_exclusivity(self):
        with pytest.raises(ValueError, match="exactly one"):
            FaultSource(mode="injected")
        with pytest.raises(ValueError, match="arc"):
            FaultSource(mode="coupled", harmonics=(HarmonicComponent(1, 1.0),))
        with pytest.raises(ValueError, match="duplicate"):
            FaultSource.injected_harmonics(
                [HarmonicComponent(1, 1.0), HarmonicComponent(1, 2.0)])
