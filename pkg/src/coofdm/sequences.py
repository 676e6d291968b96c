"""Binary training sequences: complementary pairs and LFSR sign sequences.

The complementary pair drives channel-friendly training symbols (the summed
aperiodic autocorrelation of the pair is an exact delta, so the pair's
combined power spectrum is flat), and the LFSR sequence provides the
pseudo-random ±1 weighting that sharpens the frame-timing metric into a
single-sample impulse.
"""

from __future__ import annotations

import numpy as np

from .params import ParameterError

#: Guard against runaway recursion depth (2^20 = 1M-element sequences).
MAX_GOLAY_EXPONENT = 20

#: Default 16-bit LFSR: taps of x^16 + x^12 + x^3 + x + 1 and a nonzero seed.
LFSR_TAPS = (16, 12, 3, 1)
LFSR_DEFAULT_SEED = 0xACE1


def golay_pair(k: int, n_sc: int) -> tuple[np.ndarray, np.ndarray]:
    """Generate a complementary ±1 sequence pair, truncated to n_sc entries.

    The pair is built by recursive doubling from ([+1], [+1]):
    A' = A‖B, B' = A‖−B.  When n_sc < 2^k the first n_sc entries of the
    2^k-length parents are returned; complementarity is exact only for the
    untruncated parents.

    Args:
        k: doubling exponent; parent length is 2^k.
        n_sc: number of entries to keep (<= 2^k).

    Returns:
        (seq_a, seq_b): int arrays of length n_sc with entries in {-1, +1}.
    """
    if k < 1 or k > MAX_GOLAY_EXPONENT:
        raise ParameterError(f"golay exponent k={k} outside [1, {MAX_GOLAY_EXPONENT}]")
    if n_sc < 1 or n_sc > 2**k:
        raise ParameterError(f"n_sc={n_sc} not in [1, 2^{k}]")
    a = np.array([1], dtype=np.int64)
    b = np.array([1], dtype=np.int64)
    for _ in range(k):
        a, b = np.concatenate([a, b]), np.concatenate([a, -b])
    return a[:n_sc].copy(), b[:n_sc].copy()


def aperiodic_autocorrelation(seq: np.ndarray) -> np.ndarray:
    """Aperiodic autocorrelation r[k] = sum_n seq[n]·seq[n+k] for k >= 0."""
    n = len(seq)
    full = np.correlate(seq.astype(np.int64), seq.astype(np.int64), mode="full")
    return full[n - 1 :]


def lfsr_bits(n_bits: int, seed: int = LFSR_DEFAULT_SEED,
              taps: tuple[int, ...] = LFSR_TAPS) -> np.ndarray:
    """Clock a Fibonacci LFSR and return n_bits output bits (0/1).

    The register width is the largest tap degree; seed must be nonzero
    within that width.  Output bit per step is the register LSB.
    """
    width = max(taps)
    mask = (1 << width) - 1
    state = seed & mask
    if state == 0:
        raise ParameterError("LFSR seed must be nonzero within the register width")
    out = np.empty(n_bits, dtype=np.int8)
    for i in range(n_bits):
        out[i] = state & 1
        fb = 0
        for t in taps:
            fb ^= state >> (t - 1)
        state = ((state >> 1) | ((fb & 1) << (width - 1))) & mask
    return out


def sign_sequence(length: int, seed: int = LFSR_DEFAULT_SEED) -> np.ndarray:
    """Length-`length` ±1 sequence from the LFSR (bit 0 → +1, bit 1 → −1)."""
    bits = lfsr_bits(length, seed)
    return np.where(bits == 0, 1, -1).astype(np.float64)
