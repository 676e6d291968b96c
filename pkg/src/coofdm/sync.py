"""Joint frame, carrier-frequency, and sampling-clock synchronization.

The timing metric correlates each received polarization against the *other*
polarization one-and-a-bit symbols later, exploiting the conjugate
space-time structure of the two training symbols.  At the true frame start
every product term collapses to a positive real power sample, so the
normalized metric forms a single-sample impulse at the frame start; the ±1
pseudo-random weighting of training symbol 1 destroys the coherence at
every other offset.

A carrier offset of f Hz leaves the metric magnitude nearly intact but
splits its terms into two groups with a fixed inter-group phase of
2π·f/Δf: terms with n ≤ N_cp pair samples whose indices sum to n+m = N_cp,
terms with n > N_cp pair samples with n+m = N+N_cp.  The group-phase
difference is therefore an exact, start-index-independent readout of the
fractional carrier offset.  The integer part comes from a cyclic spectrum
correlation, and the sampling-clock offset from the differential phase
slope between the two training symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frame import TrainingSet
from .params import OfdmParams, ParameterError
from .receiver import demodulate_symbols, fit_phase_slope
from .resample import KERNEL_HALF, resample_tail
from .waveform import DualPolWaveform

#: Training-symbol slot index of the second training symbol, counting the
#: frame start as slot 0; sets the phase-slope-to-gamma conversion.
S_B = 2

DEFAULT_THRESHOLD = 0.35

#: Candidate windows with less than this fraction of the strongest window's
#: self-energy have their timing-metric denominator floored (degenerate
#: near-silent windows, see _metric_values).
ENERGY_FLOOR_FRACTION = 0.02


@dataclass
class SyncConfig:
    """Tuning knobs for the synchronization pipeline.

    max_iters=0 disables clock-offset correction entirely (useful for
    before/after comparisons); max_iters=1 estimates once without
    feedback.
    """

    threshold: float = DEFAULT_THRESHOLD
    alpha_hint: int = 0
    alpha_search: int = 0
    search_range: tuple[int, int] | None = None
    q_max: int = 100
    loop_tol_ppm: float = 1.0
    max_iters: int = 3
    refine_cfo: bool = True
    keep_traces: bool = False

    def __post_init__(self) -> None:
        if not 0 < self.threshold < 1:
            raise ParameterError("threshold must be in (0, 1)")
        if self.alpha_hint < 0 or self.alpha_search < 0:
            raise ParameterError("alpha values must be >= 0")
        if self.q_max < 1 or self.max_iters < 0:
            raise ParameterError("q_max must be >= 1 and max_iters >= 0")


@dataclass
class TimingMetricTrace:
    """Normalized timing-metric values over a candidate start range."""

    values: np.ndarray
    search_range: tuple[int, int]
    peak_index: int
    peak_value: float


@dataclass
class CfoEstimate:
    """Carrier-offset decomposition in subcarrier-spacing units."""

    fractional: float
    integer: int
    subcarrier_spacing: float

    @property
    def total_hz(self) -> float:
        return (self.integer + self.fractional) * self.subcarrier_spacing


@dataclass
class ScoEstimate:
    """Sampling-clock offset from the training phase-slope fit."""

    slope_m: float
    gamma: float
    iterations: int = 1
    residual_gamma: float = 0.0
    r_squared: float = float("nan")


@dataclass
class IntegerCfoResult:
    """Cyclic spectrum-correlation readout for the integer carrier offset."""

    q: int
    shifts: np.ndarray
    magnitude: np.ndarray
    at_edge: bool


@dataclass
class FractionalCfoResult:
    """Group-phase readout for the fractional carrier offset."""

    value: float
    magnitude: float
    low_confidence: bool


@dataclass
class SyncResult:
    """Everything the synchronizer learned about one received stream."""

    frame_found: bool
    d_hat_x: int | None = None
    d_hat_y: int | None = None
    cfo: CfoEstimate | None = None
    sco: ScoEstimate | None = None
    alpha_used: int = 0
    timing_peak: float = float("nan")
    pol_disagree: bool = False
    low_confidence_cfo: bool = False
    integer_cfo_at_edge: bool = False
    timing_trace: TimingMetricTrace | None = None
    integer_cfo: IntegerCfoResult | None = None
    corrected: DualPolWaveform | None = None


def _metric_core(r_self: np.ndarray, r_other: np.ndarray, pn: np.ndarray,
                 alpha: int, d_lo: int, d_hi: int,
                 n_fft: int, n_cp: int) -> np.ndarray:
    """Complex correlation sum C(d) for candidate starts d in [d_lo, d_hi].

    C(d) = Σ_n pn[n]·[ r_self(d+n)·r_other(d+α+e(n)) −
                       r_other(d+α+n)·r_self(d+e(n)) ]
    with e(n) = N+2N_cp+mod(N_cp−n, N); the pairing index works out to
    e(n) = N+3N_cp−n for n ≤ N_cp and 2N+3N_cp−n beyond.
    """
    count = d_hi - d_lo + 1
    c = np.zeros(count, dtype=np.complex128)
    t1 = np.empty(count, dtype=np.complex128)
    t2 = np.empty(count, dtype=np.complex128)
    for n in range(n_fft + n_cp):
        e = n_fft + 2 * n_cp + (n_cp - n) % n_fft
        a0 = d_lo + n
        a1 = d_lo + alpha + e
        b0 = d_lo + alpha + n
        b1 = d_lo + e
        np.multiply(r_self[a0:a0 + count], r_other[a1:a1 + count], out=t1)
        np.multiply(r_other[b0:b0 + count], r_self[b1:b1 + count], out=t2)
        t1 -= t2
        t1 *= pn[n]
        c += t1
    return c


def _metric_values(r_self: np.ndarray, r_other: np.ndarray, pn: np.ndarray,
                   alpha: int, d_lo: int, d_hi: int, params: OfdmParams
                   ) -> np.ndarray:
    """Normalized metric |C(d)|² / (2·Σ|r_self|²)² over the window.

    The self-energy in the denominator is floored at a small fraction of
    the strongest window in the range: a near-silent window (idle samples,
    or the DC pedestal a mid-rise ADC leaves on them) whose cross terms
    reach into real signal would otherwise divide a finite numerator by
    almost nothing.  Both |C|² and the floored denominator scale with the
    fourth power of the input, so the metric stays scale-invariant.
    """
    c = _metric_core(r_self, r_other, pn, alpha, d_lo, d_hi,
                     params.n_fft, params.n_cp)
    power = np.abs(r_self) ** 2
    cs = np.concatenate([[0.0], np.cumsum(power)])
    ds = np.arange(d_lo, d_hi + 1)
    energy = cs[ds + params.symbol_len] - cs[ds]
    floor = ENERGY_FLOOR_FRACTION * energy.max() if energy.size else 0.0
    denom = (2.0 * np.maximum(energy, floor)) ** 2
    values = np.zeros(c.shape)
    nonzero = denom > 0
    values[nonzero] = np.abs(c[nonzero]) ** 2 / denom[nonzero]
    return values


def _check_range(r: DualPolWaveform, params: OfdmParams, alpha: int,
                 search_range: tuple[int, int] | None) -> tuple[int, int]:
    """Validate/derive the candidate range; the metric reads up to
    d + α + 2(N+N_cp) + mod-term, i.e. strictly less than
    d + α + 2·symbol_len + N_cp."""
    reach = 2 * params.symbol_len + alpha
    d_max_feasible = len(r) - reach - 1
    if search_range is None:
        search_range = (0, d_max_feasible)
    d_lo, d_hi = search_range
    if d_lo < 0 or d_hi < d_lo:
        raise ParameterError(f"invalid search range {search_range}")
    if d_hi > d_max_feasible:
        raise ParameterError(
            f"search range end {d_hi} needs {d_hi + reach + 1} samples, "
            f"stream has {len(r)}"
        )
    return d_lo, d_hi


def timing_metric(r: DualPolWaveform, params: OfdmParams, pn: np.ndarray,
                  alpha_hint: int = 0,
                  search_range: tuple[int, int] | None = None,
                  anchor: str = "x") -> TimingMetricTrace:
    """Sweep the frame-timing metric over candidate start indices.

    Args:
        r: received dual-polarization stream.
        params: frame geometry.
        pn: the ±1 weighting sequence of length N+N_cp.
        alpha_hint: assumed differential group delay in samples.
        search_range: inclusive (d_min, d_max) candidate window; defaults
            to every feasible start.
        anchor: "x" for the x-anchored metric, "y" for the mirrored
            y-anchored variant (its peak sits at frame start + α).

    Returns:
        TimingMetricTrace with the normalized values and peak location.
    """
    if len(pn) != params.symbol_len:
        raise ParameterError("pn length must be n_fft + n_cp")
    d_lo, d_hi = _check_range(r, params, alpha_hint, search_range)
    if anchor == "x":
        values = _metric_values(r.x, r.y, pn, alpha_hint, d_lo, d_hi, params)
    elif anchor == "y":
        values = _metric_values_y(r, pn, alpha_hint, d_lo, d_hi, params)
    else:
        raise ParameterError(f"anchor must be 'x' or 'y', got {anchor!r}")
    peak_offset = int(np.argmax(values))
    return TimingMetricTrace(
        values=values,
        search_range=(d_lo, d_hi),
        peak_index=d_lo + peak_offset,
        peak_value=float(values[peak_offset]),
    )


def _metric_values_y(r: DualPolWaveform, pn: np.ndarray, alpha: int,
                     d_lo: int, d_hi: int, params: OfdmParams) -> np.ndarray:
    """y-anchored metric: roles swapped and the α compensation mirrored."""
    if alpha == 0:
        return _metric_values(r.y, r.x, pn, 0, d_lo, d_hi, params)
    # Shift the x stream right by α so the swapped-role metric can keep
    # using a non-negative α index offset internally.
    x_shifted = np.concatenate([np.zeros(alpha, dtype=np.complex128), r.x])
    y_padded = np.concatenate([r.y, np.zeros(alpha, dtype=np.complex128)])
    return _metric_values(y_padded, x_shifted, pn, 0, d_lo, d_hi, params)


def estimate_frame_start(trace: TimingMetricTrace,
                         threshold: float = DEFAULT_THRESHOLD) -> int | None:
    """Peak position of the metric, or None when no frame is present."""
    if trace.values.size == 0:
        raise ParameterError("empty timing-metric trace")
    if trace.peak_value < threshold:
        return None
    return trace.peak_index


def estimate_fractional_cfo(r: DualPolWaveform, d_hat: int,
                            params: OfdmParams, pn: np.ndarray,
                            alpha: int = 0) -> FractionalCfoResult:
    """Fractional carrier offset, in subcarrier spacings, from the group
    phases of the timing correlation at the detected start.

    The correlation terms with n ≤ N_cp pair received samples whose index
    sum is N_cp lower than the terms with n > N_cp pair; a carrier offset
    of f rotates the two groups apart by exactly 2π·f/Δf, independent of
    the start index and the differential group delay.
    """
    n_fft, n_cp = params.n_fft, params.n_cp
    if d_hat < 0 or d_hat + alpha + 2 * params.symbol_len > len(r):
        raise ParameterError("stream too short for the correlation window")
    rx, ry = r.x, r.y
    n = np.arange(params.symbol_len)
    e = n_fft + 2 * n_cp + (n_cp - n) % n_fft
    terms = pn * (rx[d_hat + n] * ry[d_hat + alpha + e]
                  - ry[d_hat + alpha + n] * rx[d_hat + e])
    s_early = terms[:n_cp + 1].sum()
    s_late = terms[n_cp + 1:].sum()
    magnitude = min(abs(s_early), abs(s_late))
    scale = np.mean(np.abs(rx[d_hat:d_hat + params.symbol_len]) ** 2)
    low_confidence = bool(magnitude < 1e-6 * max(scale, 1e-300) * n_cp)
    value = float(np.angle(s_late * np.conj(s_early)) / (2.0 * np.pi))
    return FractionalCfoResult(value=value, magnitude=float(magnitude),
                               low_confidence=low_confidence)


def compensate_cfo(r: DualPolWaveform, f_hz: float,
                   sample_rate: float) -> DualPolWaveform:
    """Counter-rotate both polarizations by exp(−j·2π·f_hz·n/sample_rate)."""
    if abs(f_hz) >= sample_rate / 2:
        raise ParameterError("|f_hz| must be below sample_rate/2")
    if f_hz == 0.0:
        return r.copy()
    rot = np.exp(-2j * np.pi * f_hz / sample_rate * np.arange(len(r)))
    return DualPolWaveform(r.x * rot, r.y * rot, r.sample_rate)


def estimate_integer_cfo(r_comp: DualPolWaveform, d_hat: int,
                         training: TrainingSet, params: OfdmParams,
                         q_max: int = 100) -> IntegerCfoResult:
    """Integer carrier offset in subcarrier spacings.

    Cyclically cross-correlates the spectrum of the first received training
    symbol (x polarization) against the summed first-symbol grids of both
    transmit polarizations; summing the references keeps the peak present
    under arbitrary polarization mixing.  The received body is re-multiplied
    by the ±1 weighting sequence first — a carrier shift commutes with the
    weighting because the weight squares to one, so de-weighting restores
    the sharp occupied-bin comb and the correlation peak stands on the
    empty guard band.
    """
    n = params.n_fft
    start = d_hat + params.n_cp
    if d_hat < 0 or start + n > len(r_comp):
        raise ParameterError("stream too short for the training symbol")
    if q_max < 1 or q_max >= n // 2:
        raise ParameterError(f"q_max={q_max} outside [1, n_fft/2)")
    pn_body = training.pn[params.n_cp:params.n_cp + n]
    rx_spec = np.fft.fft(r_comp.x[start:start + n] * pn_body, norm="ortho")
    reference = training.placement[0, 0] + training.placement[0, 1]
    shifts = np.arange(-q_max, q_max + 1)
    idx = (np.arange(n)[None, :] - shifts[:, None]) % n
    corr = (rx_spec[None, :] * np.conj(reference[idx])).sum(axis=1)
    magnitude = np.abs(corr)
    q = int(shifts[int(np.argmax(magnitude))])
    return IntegerCfoResult(q=q, shifts=shifts, magnitude=magnitude,
                            at_edge=abs(q) == q_max)


def _pool_bins(z: np.ndarray, k: np.ndarray, win: int) -> np.ndarray:
    """Sliding complex mean of z over each contiguous run of indices k."""
    half = win // 2
    out = np.empty_like(z)
    edges = np.where(np.diff(k) != 1)[0] + 1
    for run in np.split(np.arange(k.size), edges):
        seg = z[run]
        csum = np.cumsum(np.concatenate([np.zeros(1, dtype=seg.dtype), seg]))
        idx = np.arange(seg.size)
        lo = np.maximum(idx - half, 0)
        hi = np.minimum(idx + half + 1, seg.size)
        out[run] = (csum[hi] - csum[lo]) / (hi - lo)
    return out


def estimate_sco(rx_freq: np.ndarray, tx_freq: np.ndarray,
                 params: OfdmParams, min_bins: int = 8,
                 smooth_bins: int = 9) -> ScoEstimate:
    """Sampling-clock offset from the training differential phase slope.

    The phase of received bin k advances by 2π·k·γ·(N+N_cp)/N per symbol,
    so the *difference* of the per-bin phases between the two training
    symbols isolates a line through the origin with that slope — common
    channel phase, timing offset, and residual carrier phase all cancel
    (the latter lands in the fitted intercept).

    An uncompensated clock offset also smears each subcarrier into its
    neighbours (the per-symbol drift is a small intra-symbol chirp), so
    the differential phasors carry scatter that grows toward the band
    edges — roughly white across bins, unlike the sought ramp of order
    1e-3 rad/bin.  A short complex sliding mean inside each contiguous
    subcarrier run averages that scatter down before the fit; symmetric
    windows leave a linear phase ramp unbiased.

    Args:
        rx_freq: (..., 2, n_fft) received grids; the last-but-one axis runs
            over the two training symbols.  Extra leading axes (e.g.
            polarization) are pooled coherently.
        tx_freq: matching transmitted reference grids.
        params: frame geometry.
        min_bins: minimum usable occupied bins for the fit.
        smooth_bins: odd width of the pre-fit sliding mean; 1 disables it.

    Returns:
        ScoEstimate; `slope_m` follows the convention that slope
        accumulates from the frame start, evaluated at the second training
        slot (index S_B), so gamma·2π·S_B·(N+N_cp) == slope_m·N exactly.
    """
    if smooth_bins < 1 or smooth_bins % 2 == 0:
        raise ParameterError("smooth_bins must be odd and >= 1")
    rx = np.asarray(rx_freq, dtype=np.complex128)
    tx = np.asarray(tx_freq, dtype=np.complex128)
    if rx.shape != tx.shape or rx.shape[-2] != 2 or rx.shape[-1] != params.n_fft:
        raise ParameterError(
            f"grids must share shape (..., 2, {params.n_fft}); "
            f"got {rx.shape} vs {tx.shape}"
        )
    occ_k = params.occupied_bins()
    occ = np.mod(occ_k, params.n_fft)
    # Differential rotation per bin: (rx2·conj(rx1))·conj(tx2·conj(tx1)).
    # No divisions — channel-faded bins then simply carry little weight
    # instead of amplifying noise.
    z = (rx[..., 1, occ] * np.conj(rx[..., 0, occ])
         * np.conj(tx[..., 1, occ]) * tx[..., 0, occ])
    z = z.reshape(-1, occ.size).sum(axis=0)
    if smooth_bins > 1:
        z = _pool_bins(z, occ_k, smooth_bins)
    # The intercept of the fit soaks up residual carrier phase, so only
    # the subcarrier-proportional part reaches the slope.
    delta_m, _, r_squared = fit_phase_slope(z, occ_k, min_points=min_bins)
    # delta_m is the slope per symbol step; scale to the second-slot
    # convention and invert exactly.
    slope_m = S_B * delta_m
    gamma = slope_m * params.n_fft / (2.0 * np.pi * S_B * params.symbol_len)
    return ScoEstimate(slope_m=slope_m, gamma=gamma, r_squared=r_squared)


def refine_cfo_cyclic_prefix(r: DualPolWaveform, d_hat: int,
                             params: OfdmParams, n_symbols: int,
                             guard: int = 8) -> float:
    """Residual carrier offset (Hz) from lag-N cyclic-prefix correlation.

    Every cyclic-prefix sample equals its partner one FFT length later, so
    the pooled lag-N correlation over all symbols of the frame reads the
    residual rotation with a noise floor far below the training-only
    estimate.  `guard` prefix samples are skipped per symbol to stay clear
    of inter-symbol leakage.
    """
    if not 0 <= guard < params.n_cp:
        raise ParameterError("guard must be in [0, n_cp)")
    sym_len, n = params.symbol_len, params.n_fft
    acc = 0.0 + 0.0j
    for stream in (r.x, r.y):
        for s in range(n_symbols):
            base = d_hat + s * sym_len
            if base + sym_len > len(r):
                break
            head = stream[base + guard:base + params.n_cp]
            tail = stream[base + guard + n:base + params.n_cp + n]
            acc += np.vdot(tail, head)  # Σ head·conj(tail)
    if acc == 0:
        return 0.0
    return float(-np.angle(acc) / (2.0 * np.pi) * params.subcarrier_spacing)


def synchronize(r: DualPolWaveform, params: OfdmParams,
                training: TrainingSet, cfg: SyncConfig | None = None
                ) -> SyncResult:
    """Full pipeline: frame start → fractional+integer CFO → SCO loop →
    whole-frame CFO refinement.

    Returns a SyncResult whose `corrected` waveform has all estimated
    impairments removed (frame still starting at d_hat_x), ready for
    demodulation.
    """
    cfg = cfg or SyncConfig()
    pn = training.pn

    # Timing: optionally search the differential group delay.
    alphas = ([cfg.alpha_hint] if cfg.alpha_search == 0
              else list(range(cfg.alpha_search + 1)))
    best_trace, alpha_used = None, alphas[0]
    for alpha in alphas:
        trace = timing_metric(r, params, pn, alpha, cfg.search_range)
        if best_trace is None or trace.peak_value > best_trace.peak_value:
            best_trace, alpha_used = trace, alpha
    assert best_trace is not None
    d_hat = estimate_frame_start(best_trace, cfg.threshold)
    if d_hat is None:
        return SyncResult(frame_found=False,
                          timing_peak=best_trace.peak_value,
                          timing_trace=best_trace if cfg.keep_traces else None)

    # y-anchored start: search a cyclic-prefix-wide window around d_hat.
    span = params.n_cp + alpha_used + 8
    y_lo = max(0, d_hat - span)
    y_hi = min(len(r) - 2 * params.symbol_len - alpha_used - 1, d_hat + span)
    y_trace = timing_metric(r, params, pn, alpha_used, (y_lo, y_hi), anchor="y")
    d_hat_y = y_trace.peak_index
    pol_disagree = abs(d_hat - d_hat_y) > params.n_cp

    frac = estimate_fractional_cfo(r, d_hat, params, pn, alpha=alpha_used)
    spacing = params.subcarrier_spacing
    r_frac = compensate_cfo(r, frac.value * spacing, r.sample_rate)
    integer = estimate_integer_cfo(r_frac, d_hat, training, params, cfg.q_max)
    total_hz = (integer.q + frac.value) * spacing
    r_comp = compensate_cfo(r, total_hz, r.sample_rate)

    # Sampling-clock feedback loop: estimate on the training symbols,
    # resample the frame tail anchored at d_hat, repeat on the residual.
    # The reference here is the *as-transmitted* weighted spectra, not the
    # de-weighted grids: matched products stay phase-exact even while the
    # clock drift still misaligns the received weighting pattern, which is
    # precisely the situation inside this loop.
    tx_ref = np.fft.fft(training.time_domain[:, :, params.n_cp:],
                        norm="ortho").transpose(1, 0, 2)
    loop_tol = cfg.loop_tol_ppm * 1e-6
    ratio_total = 1.0
    first_fit: ScoEstimate | None = None
    residual = 0.0
    iterations = 0
    # Each pass re-demodulates only the two training symbols, so resample
    # just that span (plus interpolation margin) while iterating; the
    # full-length pass happens once, after the estimate has converged.
    probe_end = min(len(r_comp),
                    d_hat + 2 * params.symbol_len + KERNEL_HALF + 8)
    r_probe_src = DualPolWaveform(r_comp.x[:probe_end], r_comp.y[:probe_end],
                                  r_comp.sample_rate)
    r_probe = r_probe_src
    for _ in range(cfg.max_iters):
        rx_tr = demodulate_symbols(r_probe, d_hat, params, 2)
        step = estimate_sco(rx_tr, tx_ref, params)
        if first_fit is None:
            first_fit = step
        iterations += 1
        residual = step.gamma
        ratio_total *= 1.0 + step.gamma
        gamma_acc = ratio_total - 1.0
        r_probe = (r_probe_src if abs(gamma_acc) < 1e-12
                   else resample_tail(r_probe_src, d_hat, gamma_acc))
        if abs(step.gamma) < loop_tol:
            break
    gamma_total = ratio_total - 1.0
    r_work = (r_comp if abs(gamma_total) < 1e-12
              else resample_tail(r_comp, d_hat, gamma_total))
    slope_total = gamma_total * 2.0 * np.pi * S_B * params.symbol_len / params.n_fft
    sco = ScoEstimate(slope_m=slope_total, gamma=gamma_total,
                      iterations=iterations, residual_gamma=abs(residual),
                      r_squared=first_fit.r_squared if first_fit else float("nan"))

    # Whole-frame residual carrier refinement on the clock-corrected stream.
    if cfg.refine_cfo:
        n_sym_avail = (len(r) - d_hat) // params.symbol_len
        n_sym = min(2 + params.payload_symbols, n_sym_avail)
        f_res = refine_cfo_cyclic_prefix(r_work, d_hat, params, n_sym,
                                         guard=min(8 + alpha_used,
                                                   params.n_cp - 1))
        if f_res != 0.0:
            total_hz += f_res
            r_work = compensate_cfo(r_work, f_res, r.sample_rate)

    cfo = CfoEstimate(fractional=total_hz / spacing - integer.q,
                      integer=integer.q, subcarrier_spacing=spacing)
    return SyncResult(
        frame_found=True,
        d_hat_x=d_hat,
        d_hat_y=d_hat_y,
        cfo=cfo,
        sco=sco,
        alpha_used=alpha_used,
        timing_peak=best_trace.peak_value,
        pol_disagree=pol_disagree,
        low_confidence_cfo=frac.low_confidence,
        integer_cfo_at_edge=integer.at_edge,
        timing_trace=best_trace if cfg.keep_traces else None,
        integer_cfo=integer if cfg.keep_traces else None,
        corrected=r_work,
    )
