"""Reproducible experiment runner.

A scenario couples frame geometry, channel impairments, and synchronizer
settings with a trial count and one master seed.  Every per-trial random
quantity (payload bits, capture delay, noise) derives from
(master_seed, trial_index) through independent seed-sequence children, so
trials are order-independent, parallelizable, and byte-reproducible.

Scenario files are INI text with explicit units in key names (cfo_hz,
sco_ppm, dgd_samples, osnr_db) — the classic ppm/Hz mix-up should not
survive a code review of a config file.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelConfig, pad_tail, run_channel
from .frame import TrainingSet, build_training_symbols, map_payload, modulate_frame
from .metrics import BerCurve, TrialReport, ber, cfo_mse, evm, frame_error
from .params import OfdmParams, ParameterError
from .qam import BITS_PER_SYMBOL
from .receiver import demap, demodulate_symbols, equalize, estimate_channel, \
    track_phase
from .sync import IntegerCfoResult, SyncConfig, TimingMetricTrace, synchronize
from .waveform import DualPolWaveform


@dataclass
class ScenarioConfig:
    """Everything one experiment needs, serializable to an INI file."""

    params: OfdmParams = field(default_factory=OfdmParams)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    sync: SyncConfig = field(default_factory=SyncConfig)
    trials: int = 1
    master_seed: int = 0
    random_delay_max: int | None = None
    tail_gap_samples: int = 1300
    pn_seed: int = 0xACE1
    outdir: str = "out"
    workers: int = 1
    label: str = ""

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")
        if self.tail_gap_samples < 0:
            raise ParameterError("tail_gap_samples must be >= 0")
        if self.random_delay_max is not None and self.random_delay_max < 0:
            raise ParameterError("random_delay_max must be >= 0")


# Training sets depend only on geometry and seed; memoize across trials.
_training_cache: dict[tuple, TrainingSet] = {}


def training_for(params: OfdmParams, pn_seed: int) -> TrainingSet:
    key = (dataclasses.astuple(params), pn_seed)
    if key not in _training_cache:
        _training_cache[key] = build_training_symbols(params, pn_seed)
    return _training_cache[key]


def _trial_randomness(cfg: ScenarioConfig, trial_index: int
                      ) -> tuple[np.ndarray, int, int]:
    """Derive (payload bits, delay, noise seed) for one trial."""
    root = np.random.SeedSequence(entropy=cfg.master_seed,
                                  spawn_key=(trial_index,))
    bits_ss, delay_ss, noise_ss = root.spawn(3)
    n_bits = 2 * BITS_PER_SYMBOL * cfg.params.n_sc * cfg.params.payload_symbols
    bits = np.random.Generator(np.random.Philox(bits_ss)).integers(
        0, 2, size=n_bits, dtype=np.int8)
    if cfg.random_delay_max is not None:
        delay = int(np.random.Generator(np.random.Philox(delay_ss)).integers(
            0, cfg.random_delay_max + 1))
    else:
        delay = cfg.channel.delay_samples
    noise_seed = int(noise_ss.generate_state(1, np.uint64)[0])
    return bits, delay, noise_seed


def build_tx(cfg: ScenarioConfig, bits: np.ndarray
             ) -> tuple[DualPolWaveform, np.ndarray, TrainingSet]:
    """Modulate one frame; returns (waveform, payload grid, training)."""
    params = cfg.params
    training = training_for(params, cfg.pn_seed)
    half = bits.size // 2
    payload = np.stack([map_payload(bits[:half], params),
                        map_payload(bits[half:], params)])
    w = modulate_frame(training, payload, params)
    return w, payload, training


def run_trial(cfg: ScenarioConfig, trial_index: int) -> TrialReport:
    """One end-to-end trial: modulate → channel → synchronize → demodulate.

    Deterministic in (cfg, trial_index).  The emulator's DGD setting is
    handed to the synchronizer as the known differential delay, mirroring
    a lab PMD-emulator dial, unless the scenario requests an α search.
    Stage failures are captured in the report, never raised.
    """
    params = cfg.params
    report = TrialReport(
        scenario=cfg.label, trial_index=trial_index,
        cfo_hz=cfg.channel.cfo_hz, sco_ppm=cfg.channel.sco_ppm,
        dgd_samples=cfg.channel.dgd_samples, osnr_db=cfg.channel.osnr_db,
    )
    try:
        bits, delay, noise_seed = _trial_randomness(cfg, trial_index)
        report.delay_samples = delay
        w, payload, training = build_tx(cfg, bits)
        w = pad_tail(w, cfg.tail_gap_samples)
        ch = dataclasses.replace(cfg.channel, delay_samples=delay,
                                 noise_seed=noise_seed)
        rx = run_channel(w, ch)

        sync_cfg = cfg.sync
        if sync_cfg.alpha_search == 0 and sync_cfg.alpha_hint == 0 \
                and ch.dgd_samples:
            sync_cfg = dataclasses.replace(sync_cfg, alpha_hint=ch.dgd_samples)
        if sync_cfg.search_range is None:
            hi = (cfg.random_delay_max if cfg.random_delay_max is not None
                  else delay) + 8
            sync_cfg = dataclasses.replace(sync_cfg, search_range=(0, hi))
        res = synchronize(rx, params, training, sync_cfg)

        report.frame_found = res.frame_found
        report.timing_peak = res.timing_peak
        if not res.frame_found:
            report.frame_error = True
            return report
        report.d_hat_x = res.d_hat_x
        report.d_hat_y = res.d_hat_y
        assert res.cfo is not None and res.sco is not None
        report.cfo_est_hz = res.cfo.total_hz
        report.cfo_fractional = res.cfo.fractional
        report.cfo_integer = res.cfo.integer
        report.gamma_ppm_est = res.sco.gamma * 1e6
        report.sco_iterations = res.sco.iterations
        report.frame_error = frame_error(res.d_hat_x, delay, params,
                                         ch.dgd_samples)
        if report.frame_error or params.payload_symbols == 0:
            return report

        assert res.corrected is not None
        grid = demodulate_symbols(res.corrected, res.d_hat_x, params,
                                  2 + params.payload_symbols,
                                  deweight=training.pn,
                                  alpha=min(res.alpha_used, params.n_cp))
        est = estimate_channel(grid[:, :2], training, params)
        eq = equalize(grid[:, 2:], est, params)
        eq = track_phase(eq, est.bins)
        usable = est.usable
        report.n_excluded_bins = int(np.count_nonzero(~usable))
        occ = params.occupied_fft_indices()
        tx_points = payload[:, :, occ][:, :, usable]
        eq_used = eq[:, :, usable]
        rx_bits = demap(eq_used)
        tx_bits = bits.reshape(2, params.payload_symbols, params.n_sc,
                               BITS_PER_SYMBOL)[:, :, usable, :].ravel()
        report.n_bits = int(tx_bits.size)
        report.n_bit_errors = int(np.count_nonzero(tx_bits != rx_bits))
        report.ber = ber(tx_bits, rx_bits)
        report.evm_percent = evm(eq_used, tx_points)
    except Exception as exc:  # noqa: BLE001 — trial boundary, report and move on
        report.error = f"{type(exc).__name__}: {exc}"
        report.frame_error = True
    return report


def _run_trial_star(args: tuple[ScenarioConfig, int]) -> TrialReport:
    return run_trial(*args)


def run_trials(cfg: ScenarioConfig) -> list[TrialReport]:
    """All trials of a scenario, merged in trial-index order."""
    indices = range(cfg.trials)
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(pool.map(_run_trial_star,
                                    ((cfg, i) for i in indices),
                                    chunksize=8))
    else:
        reports = [run_trial(cfg, i) for i in indices]
    return sorted(reports, key=lambda rep: rep.trial_index)


def aggregate(reports: list[TrialReport],
              subcarrier_spacing: float) -> dict:
    """Order-independent reduction of trial reports."""
    n = len(reports)
    frame_errors = sum(1 for r in reports if r.frame_error)
    cfo_truth = [r.cfo_hz for r in reports]
    cfo_est = np.array([r.cfo_est_hz for r in reports if r.frame_found
                        and np.isfinite(r.cfo_est_hz)])
    truth = np.array([t for r, t in zip(reports, cfo_truth)
                      if r.frame_found and np.isfinite(r.cfo_est_hz)])
    mse = (float(np.mean(((cfo_est - truth) / subcarrier_spacing) ** 2))
           if cfo_est.size else float("nan"))
    total_bits = sum(r.n_bits for r in reports)
    bit_errors = sum(r.n_bit_errors for r in reports)
    evms = [r.evm_percent for r in reports if np.isfinite(r.evm_percent)]
    return {
        "trials": n,
        "frame_errors": frame_errors,
        "fer": frame_errors / n if n else float("nan"),
        "cfo_mse": mse,
        "bit_errors": bit_errors,
        "total_bits": total_bits,
        "ber": bit_errors / total_bits if total_bits else float("nan"),
        "evm_percent_mean": float(np.mean(evms)) if evms else float("nan"),
        "low_confidence_trials": sum(1 for r in reports if r.error),
    }


@dataclass
class SweepResult:
    """Aggregated sweep outputs plus the files written."""

    field_name: str
    values: list
    rows: list[dict]
    curve: BerCurve | None
    files: list[Path]


def _replace_field(cfg: ScenarioConfig, field_path: str, value) -> ScenarioConfig:
    """Return a config copy with one (possibly nested) field replaced."""
    if "." in field_path:
        root, attr = field_path.split(".", 1)
        alias = {"frame": "params"}.get(root, root)
        sub = getattr(cfg, alias, None)
        if sub is None or not hasattr(sub, attr):
            raise ParameterError(f"unknown sweep field {field_path!r}")
        return dataclasses.replace(cfg, **{alias: dataclasses.replace(sub, **{attr: value})})
    for holder in ("channel", "sync", "params"):
        sub = getattr(cfg, holder)
        if hasattr(sub, field_path):
            return dataclasses.replace(
                cfg, **{holder: dataclasses.replace(sub, **{field_path: value})})
    if hasattr(cfg, field_path):
        return dataclasses.replace(cfg, **{field_path: value})
    raise ParameterError(f"unknown sweep field {field_path!r}")


def run_sweep(cfg: ScenarioConfig, swept_field: str, values,
              write_trials: bool = False) -> SweepResult:
    """Monte-Carlo sweep of exactly one field.

    Per value: cfg.trials trials are aggregated into frame-error rate,
    normalized CFO MSE, and BER; a summary CSV lands in cfg.outdir.  When
    the swept field is an OSNR the aggregate doubles as a BerCurve usable
    for R-OSNR and penalty computations.
    """
    values = list(values)
    if not values:
        raise ParameterError("sweep needs at least one value")
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    files: list[Path] = []
    for value in values:
        cfg_v = _replace_field(cfg, swept_field, value)
        reports = run_trials(cfg_v)
        agg = aggregate(reports, cfg.params.subcarrier_spacing)
        row = {"value": value, **agg}
        rows.append(row)
        if write_trials:
            path = outdir / f"trials_{_slug(swept_field)}_{_slug(value)}.csv"
            write_trial_reports(reports, path)
            files.append(path)
    summary = outdir / f"sweep_{_slug(swept_field)}.csv"
    _write_rows(summary, rows)
    files.append(summary)
    curve = None
    if swept_field.endswith("osnr_db"):
        pts = [(row["value"], row["ber"]) for row in rows
               if row["value"] is not None and np.isfinite(row["ber"])]
        pts.sort()
        if len(pts) >= 2:
            curve = BerCurve(np.array([p[0] for p in pts]),
                             np.array([p[1] for p in pts]),
                             label=cfg.label or _slug(swept_field))
    return SweepResult(field_name=swept_field, values=values, rows=rows,
                       curve=curve, files=files)


# ---------------------------------------------------------------------------
# Plot-ready CSV emission


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return format(v, ".12g")
    if v is None:
        return ""
    return str(v)


def _write_rows(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(rows[0].keys())
        for row in rows:
            writer.writerow([_fmt(v) for v in row.values()])


def write_trial_reports(reports: list[TrialReport], path: str | Path) -> Path:
    path = Path(path)
    _write_rows(path, [r.as_dict() for r in reports])
    return path


def write_timing_trace(trace: TimingMetricTrace, path: str | Path) -> Path:
    """CSV of metric value per candidate start index."""
    path = Path(path)
    d_lo = trace.search_range[0]
    rows = [{"d": d_lo + i, "metric": float(v)}
            for i, v in enumerate(trace.values)]
    _write_rows(path, rows)
    return path


def write_integer_cfo_trace(result: IntegerCfoResult, path: str | Path) -> Path:
    """CSV of correlation magnitude per spectral bin shift."""
    path = Path(path)
    rows = [{"shift": int(s), "magnitude": float(m)}
            for s, m in zip(result.shifts, result.magnitude)]
    _write_rows(path, rows)
    return path


def write_phase_slope(bins: np.ndarray, phases: np.ndarray, slope: float,
                      intercept: float, path: str | Path) -> Path:
    """CSV of unwrapped phase per subcarrier, fit parameters in the header."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# slope_m={_fmt(float(slope))} intercept={_fmt(float(intercept))}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["subcarrier", "phase_rad"])
        for k, p in zip(bins, phases):
            writer.writerow([int(k), _fmt(float(p))])
    return path


def write_constellation(eq: np.ndarray, bins: np.ndarray,
                        path: str | Path) -> Path:
    """CSV dump of equalized points: symbol, subcarrier, pol, i, q."""
    path = Path(path)
    n_pol, n_sym, n_bins = eq.shape
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["symbol", "subcarrier", "pol", "i", "q"])
        for pol in range(n_pol):
            for s in range(n_sym):
                for b in range(n_bins):
                    v = eq[pol, s, b]
                    writer.writerow([s, int(bins[b]), "xy"[pol],
                                     _fmt(float(v.real)), _fmt(float(v.imag))])
    return path


def write_ber_curve(curve: BerCurve, path: str | Path) -> Path:
    path = Path(path)
    rows = [{"osnr_db": float(o), "ber": float(b)}
            for o, b in zip(curve.osnr_db, curve.ber)]
    _write_rows(path, rows)
    return path


def read_ber_curve(path: str | Path, label: str = "") -> BerCurve:
    osnr, bers = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            osnr.append(float(row["osnr_db"]))
            bers.append(float(row["ber"]))
    return BerCurve(np.array(osnr), np.array(bers), label=label or str(path))


def _slug(v) -> str:
    return str(v).replace(".", "p").replace("-", "m").replace("/", "_")


# ---------------------------------------------------------------------------
# Scenario file round trip


def serialize_config(cfg: ScenarioConfig, path: str | Path) -> Path:
    """Write a scenario as INI text; parse_config inverts exactly."""
    parser = configparser.ConfigParser()
    parser["frame"] = {k: _ini_value(v)
                       for k, v in dataclasses.asdict(cfg.params).items()}
    parser["channel"] = {k: _ini_value(v)
                         for k, v in dataclasses.asdict(cfg.channel).items()}
    sync_d = dataclasses.asdict(cfg.sync)
    sync_d["search_range"] = ("auto" if cfg.sync.search_range is None
                              else f"{cfg.sync.search_range[0]},{cfg.sync.search_range[1]}")
    parser["sync"] = {k: _ini_value(v) for k, v in sync_d.items()}
    parser["run"] = {
        "trials": str(cfg.trials),
        "master_seed": str(cfg.master_seed),
        "random_delay_max": _ini_value(cfg.random_delay_max),
        "tail_gap_samples": str(cfg.tail_gap_samples),
        "pn_seed": str(cfg.pn_seed),
        "outdir": cfg.outdir,
        "workers": str(cfg.workers),
        "label": cfg.label,
    }
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        parser.write(fh)
    return path


def _ini_value(v) -> str:
    if v is None:
        return "off"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_scalar(text: str, kind: str):
    text = text.strip()
    if text.lower() in ("off", "none", ""):
        return None
    if kind == "int":
        return int(text, 0)
    if kind == "float":
        return float(text)
    if kind == "bool":
        if text.lower() in ("true", "1", "yes", "on"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ParameterError(f"not a boolean: {text!r}")
    return text


_SCHEMA = {
    "frame": {
        "n_fft": "int", "n_cp": "int", "n_sc": "int", "n_dc_null": "int",
        "n_center_null": "int", "n_guard": "int", "sample_rate": "float",
        "payload_symbols": "int",
    },
    "channel": {
        "delay_samples": "int", "dgd_samples": "int", "cfo_hz": "float",
        "sco_ppm": "float", "osnr_db": "float", "dac_bits": "int",
        "adc_bits": "int", "noise_seed": "int",
    },
    "sync": {
        "threshold": "float", "alpha_hint": "int", "alpha_search": "int",
        "q_max": "int", "loop_tol_ppm": "float", "max_iters": "int",
        "refine_cfo": "bool", "keep_traces": "bool", "search_range": "str",
    },
    "run": {
        "trials": "int", "master_seed": "int", "random_delay_max": "int",
        "tail_gap_samples": "int", "pn_seed": "int", "outdir": "str",
        "workers": "int", "label": "str",
    },
}


def field_kind(dotted: str) -> str:
    """Scalar kind ("int"/"float"/"bool"/"str") for a config field name.

    Accepts "section.key" or a bare key unique across sections.
    """
    if "." in dotted:
        section, key = dotted.split(".", 1)
        kind = _SCHEMA.get(section, {}).get(key)
        if kind is None:
            raise ParameterError(f"unknown config field {dotted!r}")
        return kind
    hits = [schema[dotted] for schema in _SCHEMA.values() if dotted in schema]
    if not hits:
        raise ParameterError(f"unknown config field {dotted!r}")
    if len(hits) > 1 and len(set(hits)) > 1:
        raise ParameterError(f"ambiguous config field {dotted!r}; qualify it")
    return hits[0]


def apply_override(cfg: ScenarioConfig, dotted: str, raw: str) -> ScenarioConfig:
    """Override one config field from CLI text, e.g. "channel.cfo_hz=..."."""
    value = _parse_scalar(raw, field_kind(dotted))
    key = dotted.split(".", 1)[1] if "." in dotted else dotted
    if key == "search_range":
        if value is None or value == "auto":
            value = None
        else:
            try:
                lo, hi = (int(part) for part in str(value).split(","))
                value = (lo, hi)
            except ValueError as exc:
                raise ParameterError(f"bad search_range: {raw!r}") from exc
    target = dotted.replace("run.", "") if dotted.startswith("run.") else dotted
    target = target if "." in target else key
    return _replace_field(cfg, target, value)


def parse_config(path: str | Path) -> ScenarioConfig:
    """Parse an INI scenario file; unknown keys are rejected."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ParameterError(f"cannot read scenario file {path}")
    sections: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ParameterError(f"unknown config section [{section}]")
        schema = _SCHEMA[section]
        out = {}
        for key, raw in parser[section].items():
            if key not in schema:
                raise ParameterError(f"unknown key {key!r} in [{section}]")
            try:
                out[key] = _parse_scalar(raw, schema[key])
            except ValueError as exc:
                raise ParameterError(f"bad value for {section}.{key}: {raw!r}") from exc
        sections[section] = out

    def clean(d: dict, required: tuple[str, ...] = ()) -> dict:
        return {k: v for k, v in d.items()
                if v is not None or k in required}

    params = OfdmParams(**clean(sections.get("frame", {})))
    channel = ChannelConfig(**clean(sections.get("channel", {}),
                                    required=("osnr_db", "dac_bits", "adc_bits")))
    sync_kwargs = clean(sections.get("sync", {}))
    if "search_range" in sync_kwargs:
        sr = sync_kwargs["search_range"]
        if sr == "auto":
            sync_kwargs["search_range"] = None
        else:
            try:
                lo, hi = (int(part) for part in sr.split(","))
            except ValueError as exc:
                raise ParameterError(f"bad search_range: {sr!r}") from exc
            sync_kwargs["search_range"] = (lo, hi)
    sync = SyncConfig(**sync_kwargs)
    run_kwargs = clean(sections.get("run", {}), required=("random_delay_max",))
    return ScenarioConfig(params=params, channel=channel, sync=sync, **run_kwargs)
