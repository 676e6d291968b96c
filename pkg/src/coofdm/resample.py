"""Fractional-delay resampling on a windowed-sinc polyphase table.

The occupied OFDM band extends to 0.416·fs (83% of Nyquist), and the
nearest spectral images sit above 1.168× Nyquist, so the interpolation
kernel needs in-band flatness up to 0.83× Nyquist and strong rejection
beyond 1.17×.  A 64-tap Kaiser(beta=10) windowed sinc keeps its
transition inside ±0.1× Nyquist around the cutoff, comfortably clearing
both edges with sub-1e-4 in-band error.  The continuous kernel is
tabulated at 512 phases per sample and evaluated with linear
interpolation between adjacent phase rows; each row is normalized to
unit DC gain so constant inputs pass through exactly and gain ripple
across phases vanishes.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import i0

from .params import ParameterError
from .waveform import DualPolWaveform

KERNEL_HALF = 32
KERNEL_TAPS = 2 * KERNEL_HALF
PHASES = 512
KAISER_BETA = 10.0

#: Outputs are produced in blocks to bound the gathered-window scratch size.
_BLOCK = 1 << 15

MAX_ABS_GAMMA = 1e-2


def _kernel(u: np.ndarray) -> np.ndarray:
    """Continuous interpolation kernel: sinc × Kaiser, support |u| < KERNEL_HALF."""
    w = np.zeros_like(u)
    inside = np.abs(u) < KERNEL_HALF
    t = u[inside] / KERNEL_HALF
    w[inside] = np.sinc(u[inside]) * i0(KAISER_BETA * np.sqrt(1 - t * t)) / i0(KAISER_BETA)
    return w


@lru_cache(maxsize=1)
def _phase_table() -> np.ndarray:
    """(PHASES+1, KERNEL_TAPS) tap table; row r holds kernel(j-31-r/PHASES)."""
    j = np.arange(KERNEL_TAPS, dtype=np.float64)
    mu = np.arange(PHASES + 1, dtype=np.float64)[:, None] / PHASES
    table = _kernel(j[None, :] - (KERNEL_HALF - 1) - mu)
    table /= table.sum(axis=1, keepdims=True)
    return table


def interpolate_at(samples: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Evaluate the band-limited reconstruction of `samples` at real positions.

    Positions may lie anywhere in [-1, len(samples)-1]; the signal is
    treated as zero outside its support, so values within KERNEL_HALF
    samples of either end see truncation effects.

    Args:
        samples: 1-D real or complex array.
        positions: 1-D array of fractional sample positions.

    Returns:
        Interpolated values, same dtype class as samples.
    """
    samples = np.asarray(samples)
    positions = np.asarray(positions, dtype=np.float64)
    if positions.size and (positions.min() < -1
                           or positions.max() > samples.size - 1 + 1e-9):
        raise ParameterError("interpolation positions outside the padded support")
    table = _phase_table()
    padded = np.concatenate([
        np.zeros(KERNEL_HALF, dtype=samples.dtype),
        samples,
        np.zeros(KERNEL_HALF, dtype=samples.dtype),
    ])
    windows = sliding_window_view(padded, KERNEL_TAPS)
    out = np.empty(positions.shape, dtype=np.promote_types(samples.dtype, np.float64))
    for lo in range(0, positions.size, _BLOCK):
        pos = positions[lo:lo + _BLOCK]
        n0 = np.floor(pos).astype(np.int64)
        mu = pos - n0
        phase = mu * PHASES
        row = np.minimum(phase.astype(np.int64), PHASES - 1)
        frac = (phase - row)[:, None]
        weights = table[row] * (1.0 - frac) + table[row + 1] * frac
        # Window starting index into `padded` for output position n0+mu:
        # taps span original indices [n0-31, n0+32] = padded[n0+1 : n0+65].
        gathered = windows[n0 + 1]
        out[lo:lo + _BLOCK] = np.einsum("ij,ij->i", gathered, weights)
    return out


def stream_ratio_positions(n_in: int, ratio: float, start: float = 0.0) -> np.ndarray:
    """Output sample positions start + i·ratio while they stay on the input."""
    if ratio <= 0:
        raise ParameterError("resampling ratio must be positive")
    n_out = int(np.floor((n_in - 1 - start) / ratio)) + 1
    return start + ratio * np.arange(max(n_out, 0), dtype=np.float64)


def resample(r: DualPolWaveform, gamma: float) -> DualPolWaveform:
    """Resample both polarizations at ratio 1/(1+gamma).

    This is the compensation direction: a stream acquired with a sampling
    clock running (1+gamma) fast is restored by evaluating it on the grid
    i/(1+gamma).  Output length scales by ≈ (1+gamma).
    """
    if abs(gamma) >= MAX_ABS_GAMMA:
        raise ParameterError(f"|gamma|={abs(gamma):.3g} exceeds {MAX_ABS_GAMMA}")
    if gamma == 0.0:
        return r.copy()
    positions = stream_ratio_positions(len(r), 1.0 / (1.0 + gamma))
    return DualPolWaveform(
        interpolate_at(r.x, positions),
        interpolate_at(r.y, positions),
        r.sample_rate,
    )


def resample_tail(r: DualPolWaveform, start: int, gamma: float) -> DualPolWaveform:
    """Resample the stream from `start` onward, drift anchored at `start`.

    Samples [0, start) pass through untouched and output index start+i is
    the input evaluated at start + i/(1+gamma).  The implied clock-drift
    model is zero accumulated drift *at* `start` — matching a frame whose
    rate offset is measured relative to its own beginning — so a frame
    detected at `start` keeps its start pinned while the drift across the
    frame body is removed.
    """
    if abs(gamma) >= MAX_ABS_GAMMA:
        raise ParameterError(f"|gamma|={abs(gamma):.3g} exceeds {MAX_ABS_GAMMA}")
    if not 0 <= start < len(r):
        raise ParameterError(f"start={start} outside the stream")
    if gamma == 0.0:
        return r.copy()
    positions = stream_ratio_positions(len(r) - start, 1.0 / (1.0 + gamma)) + start
    x = np.concatenate([r.x[:start], interpolate_at(r.x, positions)])
    y = np.concatenate([r.y[:start], interpolate_at(r.y, positions)])
    return DualPolWaveform(x, y, r.sample_rate)
