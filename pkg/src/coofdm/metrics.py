"""Performance metrics: error ratios, estimator accuracy, and OSNR curves.

The frame-start acceptance window follows one-tap OFDM practice: any start
inside the ISI-free part of the cyclic prefix (early by at most
N_cp − channel spread) only rotates each subcarrier linearly and is
absorbed by the equalizer, so it is not an error; any late start is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .params import OfdmParams, ParameterError


class CurveRangeError(ValueError):
    """Raised when a BER curve does not bracket the requested target."""


@dataclass
class TrialReport:
    """Ground truth, estimates, and quality figures for one trial."""

    scenario: str = ""
    trial_index: int = 0
    # ground truth
    delay_samples: int = 0
    cfo_hz: float = 0.0
    sco_ppm: float = 0.0
    dgd_samples: int = 0
    osnr_db: float | None = None
    # estimates
    frame_found: bool = False
    d_hat_x: int | None = None
    d_hat_y: int | None = None
    timing_peak: float = float("nan")
    cfo_est_hz: float = float("nan")
    cfo_fractional: float = float("nan")
    cfo_integer: int = 0
    gamma_ppm_est: float = float("nan")
    sco_iterations: int = 0
    # quality
    frame_error: bool = True
    ber: float = float("nan")
    evm_percent: float = float("nan")
    n_bits: int = 0
    n_bit_errors: int = 0
    n_excluded_bins: int = 0
    error: str = ""

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["osnr_db"] = "off" if self.osnr_db is None else self.osnr_db
        return d


@dataclass
class BerCurve:
    """Ordered (osnr_db, ber) samples of a waterfall curve."""

    osnr_db: np.ndarray
    ber: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        self.osnr_db = np.asarray(self.osnr_db, dtype=np.float64)
        self.ber = np.asarray(self.ber, dtype=np.float64)
        if self.osnr_db.shape != self.ber.shape or self.osnr_db.ndim != 1:
            raise ParameterError("osnr_db and ber must be 1-D, equal length")
        if np.any(np.diff(self.osnr_db) <= 0):
            raise ParameterError("osnr_db values must be strictly increasing")


def ber(tx_bits: np.ndarray, rx_bits: np.ndarray) -> float:
    """Exact bit-error ratio between two equal-length bit streams."""
    tx_bits = np.asarray(tx_bits).ravel()
    rx_bits = np.asarray(rx_bits).ravel()
    if tx_bits.size != rx_bits.size or tx_bits.size == 0:
        raise ParameterError(
            f"bit streams must be nonempty and equal length "
            f"({tx_bits.size} vs {rx_bits.size})"
        )
    return float(np.count_nonzero(tx_bits != rx_bits) / tx_bits.size)


def cfo_mse(estimates_hz: np.ndarray, truth_hz: float,
            subcarrier_spacing: float) -> float:
    """Mean squared carrier-offset error normalized to the subcarrier
    spacing: mean(((est − truth)/Δf)²)."""
    estimates_hz = np.asarray(estimates_hz, dtype=np.float64).ravel()
    if estimates_hz.size == 0:
        raise ParameterError("need at least one estimate")
    err = (estimates_hz - truth_hz) / subcarrier_spacing
    return float(np.mean(err**2))


def frame_error(d_hat: int | None, d_true: int, params: OfdmParams,
                channel_spread: int = 0) -> bool:
    """True when the detected start lies outside the ISI-free window
    [d_true − (N_cp − channel_spread), d_true]."""
    if d_hat is None:
        return True
    margin = params.n_cp - channel_spread
    return not (d_true - margin <= d_hat <= d_true)


def r_osnr(curve: BerCurve, target_ber: float) -> float:
    """OSNR required to reach target_ber, by log-linear interpolation.

    BER-vs-OSNR is near-exponential in the waterfall region, so log10(BER)
    is interpolated linearly against OSNR between the bracketing points.
    Zero-BER samples are floored at 1e-12 for the interpolation.

    Raises:
        CurveRangeError: the curve never crosses the target; the message
            names the nearest endpoint.
    """
    if target_ber <= 0:
        raise ParameterError("target_ber must be positive")
    osnr = curve.osnr_db
    b = np.maximum(curve.ber, 1e-12)
    log_t = np.log10(target_ber)
    log_b = np.log10(b)
    for i in range(len(osnr) - 1):
        hi, lo = log_b[i], log_b[i + 1]
        if hi == log_t:
            return float(osnr[i])
        if hi > log_t >= lo:
            frac = (log_t - hi) / (lo - hi)
            return float(osnr[i] + frac * (osnr[i + 1] - osnr[i]))
    if log_b[-1] == log_t:
        return float(osnr[-1])
    nearest = osnr[int(np.argmin(np.abs(log_b - log_t)))]
    raise CurveRangeError(
        f"target BER {target_ber:g} not bracketed by curve "
        f"'{curve.label}'; nearest point at {nearest:g} dB"
    )


def osnr_penalty(curve_impaired: BerCurve, curve_baseline: BerCurve,
                 target_ber: float) -> float:
    """R-OSNR difference (dB) of the impaired curve versus the baseline."""
    return r_osnr(curve_impaired, target_ber) - r_osnr(curve_baseline, target_ber)


def evm(equalized: np.ndarray, reference: np.ndarray) -> float:
    """RMS error vector magnitude as a percentage of RMS reference."""
    equalized = np.asarray(equalized).ravel()
    reference = np.asarray(reference).ravel()
    if equalized.shape != reference.shape or equalized.size == 0:
        raise ParameterError("grids must be nonempty and the same shape")
    p_ref = float(np.mean(np.abs(reference) ** 2))
    if p_ref == 0:
        raise ParameterError("reference grid has zero power")
    p_err = float(np.mean(np.abs(equalized - reference) ** 2))
    return 100.0 * float(np.sqrt(p_err / p_ref))
