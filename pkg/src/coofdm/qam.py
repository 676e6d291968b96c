"""Gray-coded 16-QAM mapping with unit average constellation energy.

Each symbol carries four bits: the first pair selects the in-phase level,
the second pair the quadrature level.  Per-axis Gray code: 00→−3, 01→−1,
11→+1, 10→+3, scaled by 1/sqrt(10) so E[|c|²] = 1.
"""

from __future__ import annotations

import numpy as np

BITS_PER_SYMBOL = 4

#: Per-axis amplitude for Gray pair (b0, b1) indexed as b0*2 + b1.
_GRAY_LEVELS = np.array([-3.0, -1.0, 3.0, 1.0])
_SCALE = 1.0 / np.sqrt(10.0)

#: Inverse: amplitude level {-3,-1,1,3} -> Gray bit pair.
_LEVEL_TO_BITS = {-3: (0, 0), -1: (0, 1), 1: (1, 1), 3: (1, 0)}


def qam16_map(bits: np.ndarray) -> np.ndarray:
    """Map a bit stream (multiple of 4 long) to unit-energy 16-QAM symbols."""
    bits = np.asarray(bits).ravel()
    if bits.size % BITS_PER_SYMBOL != 0:
        raise ValueError(f"bit count {bits.size} is not a multiple of {BITS_PER_SYMBOL}")
    b = bits.reshape(-1, BITS_PER_SYMBOL).astype(np.int64)
    i_lvl = _GRAY_LEVELS[b[:, 0] * 2 + b[:, 1]]
    q_lvl = _GRAY_LEVELS[b[:, 2] * 2 + b[:, 3]]
    return _SCALE * (i_lvl + 1j * q_lvl)


def qam16_demap(symbols: np.ndarray) -> np.ndarray:
    """Hard-decision demap of 16-QAM symbols back to bits.

    Nearest-level decision per axis (thresholds at −2, 0, +2 before the
    1/sqrt(10) scaling), then the Gray inverse.
    """
    symbols = np.asarray(symbols).ravel()
    out = np.empty((symbols.size, BITS_PER_SYMBOL), dtype=np.int8)
    for axis, comp in ((0, symbols.real), (2, symbols.imag)):
        lvl = _slice_levels(comp / _SCALE)
        out[:, axis] = (lvl > 0).astype(np.int8)
        out[:, axis + 1] = (np.abs(lvl) == 1).astype(np.int8)
    return out.ravel()


def _slice_levels(v: np.ndarray) -> np.ndarray:
    """Quantize real values to the nearest of {-3, -1, +1, +3}."""
    lvl = np.full(v.shape, -3, dtype=np.int64)
    lvl[v > -2] = -1
    lvl[v > 0] = 1
    lvl[v > 2] = 3
    return lvl


def qam16_nearest(symbols: np.ndarray) -> np.ndarray:
    """Nearest constellation point for each input symbol (hard decision)."""
    symbols = np.asarray(symbols)
    i_lvl = _slice_levels(symbols.real / _SCALE)
    q_lvl = _slice_levels(symbols.imag / _SCALE)
    return _SCALE * (i_lvl + 1j * q_lvl)


def constellation() -> np.ndarray:
    """The 16 constellation points in bit-pattern order (0000..1111)."""
    bits = ((np.arange(16)[:, None] >> np.arange(3, -1, -1)) & 1).ravel()
    return qam16_map(bits)
