"""Post-synchronization receiver: demodulation, channel estimation,
equalization, and bit decisions.

The two training symbols span the two polarizations in an orthogonal
space-time arrangement, so every occupied subcarrier yields a 2×2 linear
system for the Jones matrix H(k).  The first training symbol is
pseudo-randomly ±1-weighted in the time domain; since the weight squares
to one, the receiver removes it exactly by re-multiplying the received
symbol body with the same sequence before the FFT.  De-weighting is what
keeps the per-bin training system unit-modulus and perfectly conditioned —
solving against the weighted spectra instead would turn zero-forcing into
a noise amplifier on the bins where the spread spectrum happens to be
small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .frame import TrainingSet
from .params import OfdmParams, ParameterError
from .qam import qam16_demap, qam16_nearest
from .waveform import DualPolWaveform

#: Subcarriers whose training system is worse-conditioned than this are
#: excluded from equalization and error counting.
CONDITION_LIMIT = 1e6


@dataclass
class ChannelEstimate:
    """Per-subcarrier 2×2 channel estimate over the occupied bins.

    Attributes:
        h: (n_occupied, 2, 2) Jones matrices, rx polarization × tx
           polarization.
        cond: (n_occupied,) condition numbers of the training systems.
        usable: boolean mask of bins safe to equalize.
        bins: the signed subcarrier indices the rows correspond to.
    """

    h: np.ndarray
    cond: np.ndarray
    usable: np.ndarray
    bins: np.ndarray


def demodulate_symbols(r: DualPolWaveform, d_hat: int, params: OfdmParams,
                       n_symbols: int, deweight: np.ndarray | None = None,
                       alpha: int = 0) -> np.ndarray:
    """CP-strip and transform n_symbols OFDM symbols starting at d_hat.

    Args:
        r: synchronized dual-polarization stream.
        d_hat: estimated frame start (x-polarization anchor).
        params: frame geometry.
        n_symbols: how many consecutive symbols to transform.
        deweight: optional (n_fft + n_cp) ±1 weighting sequence; when
            given, the *first* symbol's body is re-multiplied by it before
            the FFT, undoing the transmit-side spreading.
        alpha: differential delay of the y polarization in samples.  The
            y stream is demodulated at the same d_hat (the delay folds
            into the channel as a phase ramp), but the de-weighting must
            follow the delayed waveform, so the y weight is shifted.

    Returns:
        (2, n_symbols, n_fft) complex grid indexed [polarization, symbol,
        bin]; bins in FFT order.
    """
    sym_len = params.symbol_len
    needed = d_hat + n_symbols * sym_len
    if d_hat < 0 or needed > len(r):
        raise ParameterError(
            f"stream too short: need {needed} samples from d_hat={d_hat}, "
            f"have {len(r)}"
        )
    weights = None
    if deweight is not None:
        if not 0 <= alpha <= params.n_cp:
            raise ParameterError(
                f"de-weighting supports 0 <= alpha <= n_cp, got {alpha}")
        lo = params.n_cp - alpha
        weights = (deweight[params.n_cp:params.n_cp + params.n_fft],
                   deweight[lo:lo + params.n_fft])
    grid = np.empty((2, n_symbols, params.n_fft), dtype=np.complex128)
    for pol, stream in enumerate((r.x, r.y)):
        for s in range(n_symbols):
            start = d_hat + s * sym_len + params.n_cp
            body = stream[start:start + params.n_fft]
            if s == 0 and weights is not None:
                body = body * weights[pol]
            grid[pol, s] = np.fft.fft(body, norm="ortho")
    return grid


def _smooth_blocks(h: np.ndarray, usable: np.ndarray, bins: np.ndarray,
                   half: int) -> np.ndarray:
    """Sliding-mean of h over each contiguous run of subcarrier indices.

    Windows clip at run boundaries (the center-null gap splits the band in
    two) and skip unusable bins; a bin with no usable neighbours stays NaN.
    """
    out = np.full_like(h, np.nan)
    edges = np.flatnonzero(np.diff(bins) != 1) + 1
    for lo, hi in zip(np.r_[0, edges], np.r_[edges, bins.size]):
        seg = slice(lo, hi)
        vals = np.where(usable[seg, None, None], h[seg], 0.0)
        counts = usable[seg].astype(np.float64)
        cs_v = np.concatenate([np.zeros((1, 2, 2), dtype=h.dtype),
                               np.cumsum(vals, axis=0)])
        cs_c = np.concatenate([[0.0], np.cumsum(counts)])
        i = np.arange(hi - lo)
        w_lo = np.maximum(i - half, 0)
        w_hi = np.minimum(i + half + 1, hi - lo)
        n = cs_c[w_hi] - cs_c[w_lo]
        with np.errstate(invalid="ignore", divide="ignore"):
            out[seg] = (cs_v[w_hi] - cs_v[w_lo]) / n[:, None, None]
    return out


def estimate_channel(rx_training: np.ndarray, training: TrainingSet,
                     params: OfdmParams, smooth_bins: int = 5) -> ChannelEstimate:
    """Solve the per-subcarrier 2×2 training system for the Jones matrix.

    Args:
        rx_training: (2, 2, n_fft) received grid [polarization, symbol, bin]
            of the two training symbols, synchronized, CFO/SCO
            compensated, and de-weighted (demodulate_symbols with
            deweight= the training pn).
        training: transmitted training set; its placement grids are the
            reference.
        params: frame geometry.
        smooth_bins: odd sliding-window width for averaging the raw
            estimates across neighbouring subcarriers.  The training gives
            one observation per bin, so without smoothing the estimate
            noise is of the same order as the data-path noise; averaging
            trades that against bias on strongly frequency-selective
            channels.  1 disables smoothing.
    """
    if smooth_bins < 1 or smooth_bins % 2 == 0:
        raise ParameterError("smooth_bins must be odd and >= 1")
    occ = params.occupied_fft_indices()
    # System per bin k: rows are the two symbol slots, columns the two
    # transmit polarizations; M[k] @ h_row(k) = rx_row(k) for each receive
    # polarization.  With de-weighted unit-modulus training, M(k)/√2 is
    # unitary, so the solve never amplifies noise.
    m = training.placement[:, :, occ].transpose(2, 0, 1)
    rhs = rx_training[:, :, occ].transpose(2, 1, 0)
    with np.errstate(all="ignore"):
        cond = np.linalg.cond(m)
    usable = np.isfinite(cond) & (cond <= CONDITION_LIMIT)
    solve_m = np.where(usable[:, None, None], m,
                       np.eye(2, dtype=np.complex128)[None])
    h_cols = np.linalg.solve(solve_m, rhs)
    # h_cols[k][tx][rx] → h[k][rx][tx]
    h = h_cols.transpose(0, 2, 1)
    bins = params.occupied_bins()
    if smooth_bins > 1:
        h = _smooth_blocks(h, usable, bins, smooth_bins // 2)
        usable = usable & np.isfinite(h).all(axis=(1, 2))
    else:
        h[~usable] = np.nan
    return ChannelEstimate(h=h, cond=cond, usable=usable,
                           bins=bins)


def equalize(grid: np.ndarray, est: ChannelEstimate,
             params: OfdmParams) -> np.ndarray:
    """Zero-forcing equalization of payload symbols on the occupied bins.

    Args:
        grid: (2, n_symbols, n_fft) received grid [pol, symbol, bin].
        est: channel estimate; unusable bins come back as NaN.

    Returns:
        (2, n_symbols, n_occupied) equalized symbols in occupied-bin order.
    """
    occ = params.occupied_fft_indices()
    rx = grid[:, :, occ].transpose(2, 0, 1)          # (n_occ, pol, sym)
    solve_h = np.where(est.usable[:, None, None], est.h,
                       np.eye(2, dtype=np.complex128)[None])
    eq = np.linalg.solve(solve_h, rx)                # (n_occ, pol, sym)
    eq = eq.transpose(1, 2, 0)
    eq[:, :, ~est.usable] = np.nan
    return eq


def fit_phase_slope(z: np.ndarray, k: np.ndarray,
                    min_points: int = 8) -> tuple[float, float, float]:
    """Weighted linear fit of angle(z) versus index k, unwrap-free.

    Stage 1 pools the rotations between adjacent indices (Σ z[i]·conj
    (z[i-1]) over consecutive-k pairs) into a coarse slope — products
    instead of unwrapped phases, so one noise-corrupted point cannot
    inject a spurious 2π step into everything after it.  The coarse
    estimate is then sharpened on a lag ladder (4, 16, 64): at each rung
    the pooled lag-L rotation, de-rotated by the current estimate, reads
    the remaining error scaled up by L.  Each rung is unambiguous as long
    as the incoming error times L stays below π, which the geometric
    progression keeps true with wide margin.  Stage 2 removes the coarse
    ramp and the common rotation, then fits the wrapped residual (now
    safely inside ±π across the whole index span) by |z|-weighted least
    squares with an intercept.

    Args:
        z: complex phasors, one per index; zeros/non-finite are ignored.
        k: matching indices, ascending.
        min_points: minimum usable points.

    Returns:
        (slope, intercept, r_squared): angle(z) ≈ slope·k + intercept;
        r_squared measures the fit against the total de-meaned phase
        variation.
    """
    z = np.asarray(z, dtype=np.complex128).ravel()
    k = np.asarray(k, dtype=np.float64).ravel()
    good = np.isfinite(z) & (np.abs(z) > 0)
    if int(np.count_nonzero(good)) < min_points:
        raise ParameterError("too few usable points for the phase fit")
    zg = z[good]
    kg = k[good]
    w = np.abs(zg)
    coarse = 0.0
    for lag in (1, 4, 16, 64):
        if lag >= kg.size:
            break
        paired = kg[lag:] - kg[:-lag] == float(lag)
        u = np.sum(zg[lag:][paired] * np.conj(zg[:-lag][paired])
                   * np.exp(-1j * coarse * lag))
        if u != 0:
            coarse += float(np.angle(u)) / lag
    rot = zg * np.exp(-1j * coarse * kg)
    mean_phase = float(np.angle(np.sum(rot)))
    dp_resid = np.angle(rot * np.exp(-1j * mean_phase))
    k_bar = np.average(kg, weights=w)
    p_bar = np.average(dp_resid, weights=w)
    dk = kg - k_bar
    dp = dp_resid - p_bar
    denom = float(np.sum(w * dk * dk))
    if denom == 0.0:
        raise ParameterError("degenerate index support for the phase fit")
    delta = float(np.sum(w * dk * dp) / denom)
    slope = coarse + delta
    intercept = mean_phase + p_bar - delta * k_bar
    ss_res = float(np.sum(w * (dp - delta * dk) ** 2))
    ss_tot = float(np.sum(w * (coarse * dk + dp) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return slope, intercept, r_squared


def track_phase(eq: np.ndarray, bins: np.ndarray) -> np.ndarray:
    """Decision-directed per-symbol linear phase correction.

    Residual carrier offset rotates every bin of symbol s by a common
    angle, and residual clock drift adds a rotation proportional to the
    subcarrier index that grows with s; both survive training-based
    compensation at the estimation-noise level.  Per symbol, the
    equalized points are compared against their nearest constellation
    points, the error phasors of both polarizations are pooled (the
    polarizations share one sampling clock), and the fitted line
    intercept + slope·k is rotated away.

    Tracking is sequential: each symbol is pre-rotated by the previous
    symbol's correction before decisions are taken.  The drift grows by
    only a small per-symbol increment, so the decision-directed stage
    always operates well inside the decision regions even when the
    rotation accumulated across the whole frame is large.

    Args:
        eq: (2, n_symbols, n_bins) equalized grid; NaN entries ignored.
        bins: signed subcarrier indices matching the last axis.

    Returns:
        Corrected copy of eq.
    """
    out = eq.copy()
    k = np.asarray(bins, dtype=np.float64)
    pred_slope = 0.0
    pred_int = 0.0
    for s in range(eq.shape[1]):
        pts = eq[:, s, :] * np.exp(-1j * (pred_slope * k + pred_int))
        with np.errstate(invalid="ignore"):
            z = pts * np.conj(qam16_nearest(pts))
        z = np.where(np.isfinite(z), z, 0).sum(axis=0)
        try:
            d_slope, d_int, _ = fit_phase_slope(z, k)
        except ParameterError:
            out[:, s, :] = pts
            continue
        pred_slope += d_slope
        pred_int += d_int
        out[:, s, :] = eq[:, s, :] * np.exp(-1j * (pred_slope * k + pred_int))
    return out


def demap(grid: np.ndarray) -> np.ndarray:
    """Hard-decision Gray demap of an equalized symbol array to bits.

    The input is flattened in C order, so for a (2, n_symbols, n_occupied)
    grid the output is the x-polarization bit stream followed by y.
    """
    return qam16_demap(np.asarray(grid).ravel())
