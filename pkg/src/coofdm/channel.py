"""Baseband impairment emulator.

Models the link between the transmit DSP and the receive DSP: converter
quantization, sampling-clock offset between the transmit and receive
converters, carrier frequency offset from the beating of free-running
lasers, first-order PMD as a whole-sample differential group delay between
the polarizations, capture delay, and amplifier noise loaded to a target
OSNR.  The stage order is fixed and mirrors the physical chain:

    DAC quantize → SCO → CFO → DGD → timing delay → noise → ADC quantize
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ParameterError
from .resample import interpolate_at, stream_ratio_positions
from .waveform import DualPolWaveform

#: OSNR reference noise bandwidth: 0.1 nm at 1550 nm.
OSNR_REF_BANDWIDTH_HZ = 12.5e9

MAX_ABS_SCO_PPM = 1000.0


@dataclass
class ChannelConfig:
    """One trial's impairment settings.

    osnr_db = None disables noise loading; dac_bits/adc_bits = None disable
    the corresponding quantizer.
    """

    delay_samples: int = 0
    dgd_samples: int = 0
    cfo_hz: float = 0.0
    sco_ppm: float = 0.0
    osnr_db: float | None = None
    dac_bits: int | None = None
    adc_bits: int | None = None
    noise_seed: int = 0

    def __post_init__(self) -> None:
        if self.delay_samples < 0 or self.dgd_samples < 0:
            raise ParameterError("delay_samples and dgd_samples must be >= 0")
        if abs(self.sco_ppm) >= MAX_ABS_SCO_PPM:
            raise ParameterError(f"|sco_ppm| must be < {MAX_ABS_SCO_PPM}")
        for bits in (self.dac_bits, self.adc_bits):
            if bits is not None and not 2 <= bits <= 16:
                raise ParameterError("quantizer bits must be in [2, 16]")


def apply_timing_offset(w: DualPolWaveform, delay_samples: int) -> DualPolWaveform:
    """Prepend zero samples to both polarizations (capture delay)."""
    if delay_samples < 0:
        raise ParameterError("delay_samples must be >= 0")
    if delay_samples == 0:
        return w.copy()
    z = np.zeros(delay_samples, dtype=np.complex128)
    return DualPolWaveform(np.concatenate([z, w.x]),
                           np.concatenate([z, w.y]), w.sample_rate)


def apply_dgd(w: DualPolWaveform, alpha_samples: int) -> DualPolWaveform:
    """Delay y by alpha whole samples relative to x; lengths re-equalized."""
    if alpha_samples < 0:
        raise ParameterError("alpha_samples must be >= 0")
    if alpha_samples == 0:
        return w.copy()
    z = np.zeros(alpha_samples, dtype=np.complex128)
    return DualPolWaveform(np.concatenate([w.x, z]),
                           np.concatenate([z, w.y]), w.sample_rate)


def apply_cfo(w: DualPolWaveform, cfo_hz: float, sample_rate: float) -> DualPolWaveform:
    """Rotate both polarizations by exp(+j·2π·cfo_hz·n/sample_rate)."""
    if abs(cfo_hz) >= sample_rate / 2:
        raise ParameterError("|cfo_hz| must be below sample_rate/2")
    if cfo_hz == 0.0:
        return w.copy()
    rot = np.exp(2j * np.pi * cfo_hz / sample_rate * np.arange(len(w)))
    return DualPolWaveform(w.x * rot, w.y * rot, w.sample_rate)


def apply_sco(w: DualPolWaveform, sco_ppm: float) -> DualPolWaveform:
    """Emulate a receive clock running (1+γ) fast, γ = sco_ppm·1e-6.

    Both streams are re-evaluated on the grid i·(1+γ); output length
    scales by ≈ 1/(1+γ).
    """
    if abs(sco_ppm) >= MAX_ABS_SCO_PPM:
        raise ParameterError(f"|sco_ppm| must be < {MAX_ABS_SCO_PPM}")
    gamma = sco_ppm * 1e-6
    if gamma == 0.0:
        return w.copy()
    positions = stream_ratio_positions(len(w), 1.0 + gamma)
    return DualPolWaveform(interpolate_at(w.x, positions),
                           interpolate_at(w.y, positions), w.sample_rate)


def load_noise(w: DualPolWaveform, osnr_db: float, sample_rate: float,
               noise_seed: int) -> DualPolWaveform:
    """Add circular complex white Gaussian noise at a target OSNR.

    Total noise power P_N = P_sig / 10^(OSNR/10) · (sample_rate / 12.5 GHz),
    split equally between polarizations.  Signal power is averaged over the
    active signal support (samples carrying any energy) so leading delay
    zeros or trailing capture padding do not bias the calibration.
    """
    energy = np.abs(w.x) ** 2 + np.abs(w.y) ** 2
    active = energy > 0
    n_active = int(np.count_nonzero(active))
    if n_active == 0:
        raise ParameterError("cannot set an OSNR on an all-zero waveform")
    p_sig = float(energy.sum() / n_active)
    p_noise = p_sig * 10.0 ** (-osnr_db / 10.0) * (sample_rate / OSNR_REF_BANDWIDTH_HZ)
    sigma = np.sqrt(p_noise / 4.0)  # per polarization, per quadrature
    rng = np.random.Generator(np.random.Philox(key=noise_seed))
    n = len(w)
    nx = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    ny = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return DualPolWaveform(w.x + nx, w.y + ny, w.sample_rate)


def quantize(w: DualPolWaveform, bits: int) -> DualPolWaveform:
    """Uniform mid-rise quantization of I and Q, clipped at ±4σ.

    σ is the RMS over all four rails, giving the converters one shared
    full-scale range.  All-zero input passes through unchanged.
    """
    if not 2 <= bits <= 16:
        raise ParameterError("quantizer bits must be in [2, 16]")
    rails = np.concatenate([w.x.real, w.x.imag, w.y.real, w.y.imag])
    sigma = float(np.sqrt(np.mean(rails**2)))
    if sigma == 0.0:
        return w.copy()
    full_scale = 4.0 * sigma
    step = 2.0 * full_scale / (2**bits)
    top = full_scale - step / 2.0

    def q(v: np.ndarray) -> np.ndarray:
        return np.clip(step * (np.floor(v / step) + 0.5), -top, top)

    return DualPolWaveform(q(w.x.real) + 1j * q(w.x.imag),
                           q(w.y.real) + 1j * q(w.y.imag), w.sample_rate)


def pad_tail(w: DualPolWaveform, n_samples: int) -> DualPolWaveform:
    """Append zero samples to both polarizations (capture tail margin)."""
    if n_samples < 0:
        raise ParameterError("n_samples must be >= 0")
    if n_samples == 0:
        return w.copy()
    z = np.zeros(n_samples, dtype=np.complex128)
    return DualPolWaveform(np.concatenate([w.x, z]),
                           np.concatenate([w.y, z]), w.sample_rate)


def run_channel(w: DualPolWaveform, cfg: ChannelConfig) -> DualPolWaveform:
    """Apply all configured impairments in the fixed physical order."""
    out = w
    if cfg.dac_bits is not None:
        out = quantize(out, cfg.dac_bits)
    if cfg.sco_ppm != 0.0:
        out = apply_sco(out, cfg.sco_ppm)
    if cfg.cfo_hz != 0.0:
        out = apply_cfo(out, cfg.cfo_hz, w.sample_rate)
    if cfg.dgd_samples:
        out = apply_dgd(out, cfg.dgd_samples)
    if cfg.delay_samples:
        out = apply_timing_offset(out, cfg.delay_samples)
    if cfg.osnr_db is not None:
        out = load_noise(out, cfg.osnr_db, w.sample_rate, cfg.noise_seed)
    if cfg.adc_bits is not None:
        out = quantize(out, cfg.adc_bits)
    if out is w:
        out = w.copy()
    return out
