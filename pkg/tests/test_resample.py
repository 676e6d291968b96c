"""Band-limited fractional resampling: kernel accuracy and anchoring.

Oracles are analytic: complex exponentials evaluated at the requested
fractional positions, plus exact pass-through cases the polyphase table
must honor by construction (integer positions, constant inputs).
"""

import numpy as np
import pytest

from coofdm.params import ParameterError
from coofdm.resample import (
    KERNEL_HALF,
    MAX_ABS_GAMMA,
    interpolate_at,
    resample,
    resample_tail,
    stream_ratio_positions,
)
from coofdm.waveform import DualPolWaveform

SINUSOID_TOL = 1e-4       # at 0.2 of the sample rate
BAND_EDGE_TOL = 1e-4      # at 0.414 of the sample rate (band edge is 0.416)
ROUND_TRIP_TOL = 1e-3     # full-scale, back-to-back resample

N = 4096
EDGE = 2 * KERNEL_HALF    # stay clear of zero-padded support ends


def tone(f_norm, n=N, phase=0.3):
    return np.exp(2j * np.pi * (f_norm * np.arange(n) + phase))


def test_integer_positions_pass_through():
    rng = np.random.default_rng(1)
    x = rng.normal(size=N) + 1j * rng.normal(size=N)
    pos = np.arange(EDGE, N - EDGE, dtype=np.float64)
    got = interpolate_at(x, pos)
    assert np.abs(got - x[EDGE:N - EDGE]).max() < 1e-12


def test_constant_input_exact_at_any_phase():
    # per-phase DC normalization: constants survive arbitrary offsets
    x = np.full(N, 0.7 - 0.2j)
    pos = np.linspace(EDGE, N - EDGE, 1777)
    got = interpolate_at(x, pos)
    assert np.abs(got - (0.7 - 0.2j)).max() < 1e-12


@pytest.mark.parametrize("f_norm,tol", [
    (0.05, SINUSOID_TOL),
    (0.2, SINUSOID_TOL),
    (0.414, BAND_EDGE_TOL),
])
def test_sinusoid_oracle(f_norm, tol):
    x = tone(f_norm)
    pos = np.arange(EDGE, N - EDGE, 0.3777)
    got = interpolate_at(x, pos)
    want = np.exp(2j * np.pi * (f_norm * pos + 0.3))
    assert np.abs(got - want).max() < tol


def test_positions_outside_support_rejected():
    x = np.zeros(32, dtype=np.complex128)
    with pytest.raises(ParameterError):
        interpolate_at(x, np.array([-1.5]))
    with pytest.raises(ParameterError):
        interpolate_at(x, np.array([31.5]))


def test_stream_ratio_positions_geometry():
    pos = stream_ratio_positions(100, 0.5, start=3.0)
    assert pos[0] == 3.0
    assert np.allclose(np.diff(pos), 0.5)
    assert pos[-1] <= 99.0
    with pytest.raises(ParameterError):
        stream_ratio_positions(100, 0.0)


def test_resample_round_trip():
    gamma = 1.6e-4
    rng = np.random.default_rng(7)
    x = rng.normal(size=N) + 1j * rng.normal(size=N)
    # confine to the occupied band so the oracle is in the kernel passband
    spec = np.fft.fft(x)
    cut = int(0.416 * N)
    spec[cut:N - cut] = 0
    x = np.fft.ifft(spec)
    w = DualPolWaveform(x, x.copy(), 25e9)
    # (1 + g2)(1 + gamma) = 1 undoes the first pass
    fwd = resample(w, gamma)
    back = resample(fwd, -gamma / (1.0 + gamma))
    m = min(len(back), N) - EDGE
    core = slice(EDGE, m)
    scale = np.abs(x[core]).max()
    assert np.abs(back.x[core] - x[core]).max() / scale < ROUND_TRIP_TOL


def test_resample_zero_gamma_copies():
    w = DualPolWaveform(np.ones(64, dtype=np.complex128), np.zeros(64))
    out = resample(w, 0.0)
    assert out is not w and out.x is not w.x
    assert np.array_equal(out.x, w.x)


def test_resample_gamma_bound():
    w = DualPolWaveform(np.ones(64, dtype=np.complex128), np.zeros(64))
    with pytest.raises(ParameterError):
        resample(w, MAX_ABS_GAMMA)


def test_resample_tail_head_untouched():
    rng = np.random.default_rng(11)
    x = rng.normal(size=N) + 1j * rng.normal(size=N)
    w = DualPolWaveform(x, x[::-1].copy(), 25e9)
    start = 500
    out = resample_tail(w, start, 2e-4)
    assert np.array_equal(out.x[:start], w.x[:start])
    assert np.array_equal(out.y[:start], w.y[:start])
    assert not np.array_equal(out.x[start:start + 100], w.x[start:start + 100])


def test_resample_tail_anchor_is_start():
    # drift is zero AT the anchor: output[start + i] samples the input at
    # start + i/(1+g), so for a pure tone the corrected tail must match
    # the tone evaluated on that grid
    gamma = 5e-4
    f = 0.21
    x = tone(f)
    w = DualPolWaveform(x, x.copy(), 25e9)
    start = 700
    out = resample_tail(w, start, gamma)
    i = np.arange(EDGE, 2000, dtype=np.float64)
    want = np.exp(2j * np.pi * (f * (start + i / (1 + gamma)) + 0.3))
    got = out.x[start + EDGE:start + 2000]
    assert np.abs(got - want).max() < SINUSOID_TOL


def test_resample_tail_validation():
    w = DualPolWaveform(np.ones(64, dtype=np.complex128), np.zeros(64))
    with pytest.raises(ParameterError):
        resample_tail(w, -1, 1e-4)
    with pytest.raises(ParameterError):
        resample_tail(w, 64, 1e-4)
    with pytest.raises(ParameterError):
        resample_tail(w, 0, MAX_ABS_GAMMA)
    out = resample_tail(w, 5, 0.0)
    assert np.array_equal(out.x, w.x)
