"""OFDM frame geometry and derived constants.

The subcarrier plan is fixed by four counts that must tile the FFT exactly:
occupied data bins, band-edge guard bins (oversampling nulls), a DC null, and
a block of center nulls straddling DC.  Everything downstream (training
construction, demodulation windows, phase-slope fits) indexes subcarriers by
their *signed* frequency index k, with k=0 at DC.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    """Raised when a configuration value violates a documented precondition."""


@dataclass
class OfdmParams:
    """Frame geometry for the dual-polarization OFDM transceiver.

    Attributes:
        n_fft: transform size N.
        n_cp: cyclic prefix length in samples.
        n_sc: number of occupied (data/training) subcarriers.
        n_dc_null: nulled bins at DC (always the k=0 bin).
        n_center_null: nulled bins around DC, split evenly on both sides.
        n_guard: band-edge oversampling nulls at the highest |k|.
        sample_rate: converter sample rate in Hz.
        payload_symbols: payload OFDM symbols per frame (per polarization).
    """

    n_fft: int = 512
    n_cp: int = 46
    n_sc: int = 416
    n_dc_null: int = 1
    n_center_null: int = 10
    n_guard: int = 85
    sample_rate: float = 25e9
    payload_symbols: int = 50

    def __post_init__(self) -> None:
        if self.n_fft <= 0 or self.n_cp < 0 or self.n_cp >= self.n_fft:
            raise ParameterError(f"invalid n_fft={self.n_fft}, n_cp={self.n_cp}")
        if self.n_sc + self.n_guard + self.n_dc_null + self.n_center_null != self.n_fft:
            raise ParameterError(
                "subcarrier budget must tile the FFT: "
                f"{self.n_sc}+{self.n_guard}+{self.n_dc_null}+{self.n_center_null} "
                f"!= {self.n_fft}"
            )
        if self.n_center_null % 2 != 0:
            raise ParameterError("n_center_null must be even (symmetric around DC)")
        if self.sample_rate <= 0:
            raise ParameterError("sample_rate must be positive")
        if self.payload_symbols < 0:
            raise ParameterError("payload_symbols must be >= 0")

    @property
    def symbol_len(self) -> int:
        """Time-domain OFDM symbol length including cyclic prefix."""
        return self.n_fft + self.n_cp

    @property
    def subcarrier_spacing(self) -> float:
        """Subcarrier spacing in Hz (sample_rate / n_fft)."""
        return self.sample_rate / self.n_fft

    def frame_len(self, payload_symbols: int | None = None) -> int:
        """Total frame length in samples: 2 training symbols plus payload."""
        p = self.payload_symbols if payload_symbols is None else payload_symbols
        return (2 + p) * self.symbol_len

    def occupied_bins(self) -> np.ndarray:
        """Signed subcarrier indices k carrying data, ascending.

        The occupied band is symmetric: after removing the DC bin, the
        center nulls (n_center_null/2 on each side of DC) and the band-edge
        guards, the remaining indices form two contiguous blocks
        [-k_hi, -k_lo] and [k_lo, k_hi].
        """
        half_center = self.n_center_null // 2
        k_lo = 1 + half_center
        per_side = self.n_sc // 2
        if self.n_sc % 2 != 0:
            raise ParameterError("n_sc must be even for a symmetric band plan")
        k_hi = k_lo + per_side - 1
        if k_hi > self.n_fft // 2 - 1:
            raise ParameterError("occupied band exceeds the FFT half-width")
        neg = np.arange(-k_hi, -k_lo + 1)
        pos = np.arange(k_lo, k_hi + 1)
        return np.concatenate([neg, pos])

    def occupied_fft_indices(self) -> np.ndarray:
        """Occupied bins as non-negative FFT array indices (k mod n_fft)."""
        return np.mod(self.occupied_bins(), self.n_fft)


#: Convenience frozen copy of the nominal transceiver geometry.
DEFAULT_PARAMS = OfdmParams()
