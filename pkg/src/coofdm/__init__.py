"""Dual-polarization coherent optical OFDM baseband simulator.

Transmitter, channel emulator, and a joint frame/carrier/clock
synchronizer built around polarization-time-coded training symbols, plus
the measurement harness used to characterize them.
"""

from .channel import ChannelConfig, apply_cfo, apply_dgd, apply_sco, \
    apply_timing_offset, load_noise, pad_tail, quantize, run_channel
from .frame import TrainingSet, build_training_symbols, cp_extend, \
    map_payload, modulate_frame, ofdm_symbol
from .harness import ScenarioConfig, SweepResult, aggregate, parse_config, \
    run_sweep, run_trial, run_trials, serialize_config, training_for
from .metrics import BerCurve, CurveRangeError, TrialReport, ber, cfo_mse, \
    evm, frame_error, osnr_penalty, r_osnr
from .params import DEFAULT_PARAMS, OfdmParams, ParameterError
from .qam import constellation, qam16_demap, qam16_map
from .receiver import ChannelEstimate, demap, demodulate_symbols, equalize, \
    estimate_channel
from .resample import interpolate_at, resample, resample_tail
from .sequences import aperiodic_autocorrelation, golay_pair, lfsr_bits, \
    sign_sequence
from .sync import CfoEstimate, ScoEstimate, SyncConfig, SyncResult, \
    TimingMetricTrace, compensate_cfo, estimate_fractional_cfo, \
    estimate_frame_start, estimate_integer_cfo, estimate_sco, \
    refine_cfo_cyclic_prefix, synchronize, timing_metric
from .waveform import DualPolWaveform, WaveformFormatError, export_waveform, \
    import_waveform

__version__ = "0.1.0"

__all__ = [
    "BerCurve", "CfoEstimate", "ChannelConfig", "ChannelEstimate",
    "CurveRangeError", "DEFAULT_PARAMS", "DualPolWaveform", "OfdmParams",
    "ParameterError", "ScenarioConfig", "ScoEstimate", "SweepResult",
    "SyncConfig", "SyncResult", "TimingMetricTrace", "TrainingSet",
    "TrialReport", "WaveformFormatError", "aggregate",
    "aperiodic_autocorrelation", "apply_cfo", "apply_dgd", "apply_sco",
    "apply_timing_offset", "ber", "build_training_symbols", "cfo_mse",
    "compensate_cfo", "constellation", "cp_extend", "demap",
    "demodulate_symbols", "equalize", "estimate_channel",
    "estimate_fractional_cfo", "estimate_frame_start", "estimate_integer_cfo",
    "estimate_sco", "evm", "export_waveform", "frame_error", "golay_pair",
    "import_waveform", "interpolate_at", "lfsr_bits", "load_noise",
    "map_payload", "modulate_frame", "ofdm_symbol", "osnr_penalty",
    "pad_tail", "parse_config", "qam16_demap", "qam16_map", "quantize",
    "r_osnr", "refine_cfo_cyclic_prefix", "resample", "resample_tail",
    "run_channel", "run_sweep", "run_trial", "run_trials",
    "serialize_config", "sign_sequence", "synchronize",
    "timing_metric", "training_for",
]
