"""Zero-sequence workbench for high-impedance arc faults in
resonant-grounded distribution feeders.

Simulates the energy-balance arc and the n-feeder zero-sequence circuit in
the time domain, carries the closed-form harmonic transfer theory (lossless
and damped), and identifies the faulty feeder from pairwise 3rd-harmonic
phase differences. The time-domain simulator and the closed-form theory
verify each other.
"""

from ._kernels import ENV_FLAG, USING_NUMBA
from ._version import __version__
from .angles import wrap_deg, wrap_deg_scalar
from .arc import (ArcParameters, ArcSource, ArcState, DistortionMetrics,
                  arc_resistance_step, count_spikes_per_cycle,
                  distortion_metrics, simulate_arc_circuit)
from .errors import (ConfigurationError, EstimationError, HifbenchError,
                     ScenarioParseError, SingularNetworkError,
                     SynchronizationError, WaveformParseError)
from .identify import (EffectiveAreaMap, IdentificationResult, WindowDecision,
                       classic_criterion_met, classic_delta_phi,
                       default_d_grid, default_v_grid, effective_area_map,
                       identify, pairwise_indicator)
from .network import (FaultSource, FeederSpec, HarmonicComponent,
                      NetworkParameters, damping_ratio, detuning_index,
                      feeder_channel, simulate_zero_sequence)
from .phasors import (DecompositionResult, PhasorSet, decompose_waveform,
                      recompose_scaled, sliding_phasor_stream, window_phasors)
from .runner import (RunBundle, run, sweep, write_bundle, write_sweep_table)
from .scenario import (AnalysisSettings, Scenario, SimSettings, SweepSpec,
                       dumps_scenario, load_scenario, load_sweep,
                       loads_scenario, save_scenario, scenario_hash)
from .theory import (FeederTransfers, HarmonicTransfer, LosslessCoefficients,
                     NetworkEstimate, damped_transfer,
                     estimate_network_parameters, harmonic_gain_factor,
                     lossless_transfer, midpoint_gain_factor,
                     network_transfers, predict_feeder_waveforms)
from .waveform import WaveformRecord, export_waveforms, import_waveforms
