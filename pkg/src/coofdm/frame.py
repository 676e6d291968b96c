"""Transmit-side frame construction.

A frame is two training symbols followed by payload symbols, per
polarization.  The training spreads a complementary sequence pair across the
two symbols and two polarizations in the orthogonal 2×2 space-time
arrangement (symbol 1: x←A, y←B; symbol 2: x←−B*, y←A*), and the first
training symbol of *both* polarizations is weighted sample-by-sample with a
±1 pseudo-random sequence.  The weighting is what turns the frame-timing
metric into a single-sample impulse; building it CP-periodically (the
weight repeats with period N) keeps the weighted symbol a valid
cyclic-prefixed OFDM symbol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import OfdmParams, ParameterError
from .qam import BITS_PER_SYMBOL, qam16_map
from .sequences import golay_pair, sign_sequence
from .waveform import DualPolWaveform


@dataclass
class TrainingSet:
    """Training sequences plus their frequency- and time-domain forms.

    Attributes:
        seq_a, seq_b: the ±1 complementary pair mapped onto occupied bins.
        pn: length-(N+N_cp) ±1 weighting sequence, CP-periodic.
        placement: (2, 2, n_fft) frequency-domain grids indexed
            [symbol, polarization, bin].  Because the pn weighting squares
            to one, a receiver that re-multiplies the first symbol by pn
            in the time domain sees exactly these unit-modulus grids, so
            placement is the reference for every frequency-domain
            estimator.
        time_domain: (2, 2, N+N_cp) CP-prefixed transmitted symbols,
            pn weighting included.
    """

    seq_a: np.ndarray
    seq_b: np.ndarray
    pn: np.ndarray
    placement: np.ndarray
    time_domain: np.ndarray


def cp_extend(body: np.ndarray, n_cp: int) -> np.ndarray:
    """Prepend the last n_cp samples of an N-sample body as cyclic prefix."""
    return np.concatenate([body[-n_cp:], body]) if n_cp else body.copy()


def ofdm_symbol(grid_row: np.ndarray, n_cp: int) -> np.ndarray:
    """Unitary IFFT of one frequency-domain row, then CP extension."""
    return cp_extend(np.fft.ifft(grid_row, norm="ortho"), n_cp)


def build_training_symbols(params: OfdmParams, pn_seed: int = 0xACE1) -> TrainingSet:
    """Construct the two dual-polarization training symbols.

    Args:
        params: frame geometry.
        pn_seed: LFSR seed for the ±1 weighting sequence (deterministic).

    Returns:
        A fully populated TrainingSet.
    """
    n, n_cp = params.n_fft, params.n_cp
    exponent = int(np.ceil(np.log2(params.n_sc)))
    seq_a, seq_b = golay_pair(exponent, params.n_sc)
    occ = params.occupied_fft_indices()

    placement = np.zeros((2, 2, n), dtype=np.complex128)
    placement[0, 0, occ] = seq_a
    placement[0, 1, occ] = seq_b
    placement[1, 0, occ] = -np.conj(seq_b)
    placement[1, 1, occ] = np.conj(seq_a)

    # CP-periodic weight: generate the N-sample body, then copy its tail in
    # front exactly like a cyclic prefix.
    pn_body = sign_sequence(n, pn_seed)
    pn = np.concatenate([pn_body[-n_cp:], pn_body]) if n_cp else pn_body

    time_domain = np.empty((2, 2, n + n_cp), dtype=np.complex128)
    for pol in range(2):
        time_domain[0, pol] = pn * ofdm_symbol(placement[0, pol], n_cp)
        time_domain[1, pol] = ofdm_symbol(placement[1, pol], n_cp)

    return TrainingSet(seq_a, seq_b, pn, placement, time_domain)


def map_payload(bits: np.ndarray, params: OfdmParams) -> np.ndarray:
    """Map one polarization's bit stream onto a frequency-domain grid.

    Args:
        bits: exactly 4·n_sc·payload_symbols bits.
        params: frame geometry (payload_symbols rows are produced).

    Returns:
        (payload_symbols, n_fft) complex grid, zeros on null bins.
    """
    bits = np.asarray(bits).ravel()
    expected = BITS_PER_SYMBOL * params.n_sc * params.payload_symbols
    if bits.size != expected:
        raise ParameterError(f"expected {expected} bits, got {bits.size}")
    grid = np.zeros((params.payload_symbols, params.n_fft), dtype=np.complex128)
    if params.payload_symbols:
        points = qam16_map(bits).reshape(params.payload_symbols, params.n_sc)
        grid[:, params.occupied_fft_indices()] = points
    return grid


def modulate_frame(training: TrainingSet, payload: np.ndarray,
                   params: OfdmParams) -> DualPolWaveform:
    """Assemble the time-domain frame for both polarizations.

    Args:
        training: output of build_training_symbols.
        payload: (2, n_payload, n_fft) frequency-domain grids, [pol, sym, bin].
        params: frame geometry.

    Returns:
        DualPolWaveform of length (2 + n_payload)·(n_fft + n_cp) per
        polarization.
    """
    payload = np.asarray(payload, dtype=np.complex128)
    if payload.ndim != 3 or payload.shape[0] != 2 or payload.shape[2] != params.n_fft:
        raise ParameterError(f"payload grid shape {payload.shape} invalid")
    streams = []
    for pol in range(2):
        parts = [training.time_domain[0, pol], training.time_domain[1, pol]]
        parts.extend(ofdm_symbol(row, params.n_cp) for row in payload[pol])
        streams.append(np.concatenate(parts))
    return DualPolWaveform(streams[0], streams[1], params.sample_rate)
