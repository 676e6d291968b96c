"""Scenario harness: trial determinism, aggregation arithmetic, config
round trips, sweep outputs, and CSV writer schemas."""

import csv
import hashlib
from pathlib import Path

import numpy as np
import pytest

from coofdm.channel import ChannelConfig
from coofdm.harness import (
    ScenarioConfig,
    aggregate,
    apply_override,
    field_kind,
    parse_config,
    read_ber_curve,
    run_sweep,
    run_trial,
    run_trials,
    serialize_config,
    training_for,
    write_ber_curve,
    write_constellation,
    write_integer_cfo_trace,
    write_phase_slope,
    write_timing_trace,
    write_trial_reports,
)
from coofdm.metrics import BerCurve, TrialReport
from coofdm.params import OfdmParams, ParameterError
from coofdm.sync import SyncConfig, estimate_integer_cfo, timing_metric

SMALL = OfdmParams(payload_symbols=2)


def small_cfg(**kw):
    base = dict(params=SMALL, trials=1, master_seed=11,
                random_delay_max=200, tail_gap_samples=400)
    base.update(kw)
    return ScenarioConfig(**base)


def test_run_trial_deterministic():
    cfg = small_cfg(channel=ChannelConfig(cfo_hz=3e8, osnr_db=18.0))
    a = run_trial(cfg, 0)
    b = run_trial(cfg, 0)
    assert a == b
    assert a.error == ""


def test_run_trial_identity_channel():
    rep = run_trial(small_cfg(), 0)
    assert rep.frame_found and not rep.frame_error
    assert rep.ber == 0.0
    assert rep.evm_percent < 1e-6
    assert rep.n_bits == 2 * SMALL.payload_symbols * SMALL.n_sc * 4


def test_run_trials_randomize_per_index():
    cfg = small_cfg(trials=3, random_delay_max=1000)
    reports = run_trials(cfg)
    assert [r.trial_index for r in reports] == [0, 1, 2]
    assert len({r.delay_samples for r in reports}) > 1
    assert all(not r.frame_error for r in reports)


def test_run_trial_reports_failure_not_raises():
    # bury the frame in noise: the trial must come back as a failed
    # report, not an exception
    cfg = small_cfg(channel=ChannelConfig(osnr_db=-20.0))
    rep = run_trial(cfg, 0)
    assert rep.frame_error
    assert not rep.frame_found or rep.error


def test_training_for_is_cached():
    assert training_for(SMALL, 0xACE1) is training_for(SMALL, 0xACE1)
    assert training_for(SMALL, 0xACE1) is not training_for(SMALL, 0x1234)


def test_aggregate_hand_arithmetic():
    sp = 48828125.0
    ok1 = TrialReport(frame_found=True, frame_error=False, cfo_hz=1e9,
                      cfo_est_hz=1e9 + 0.1 * sp, n_bits=100,
                      n_bit_errors=2, ber=0.02, evm_percent=1.0)
    ok2 = TrialReport(frame_found=True, frame_error=False, cfo_hz=1e9,
                      cfo_est_hz=1e9 - 0.3 * sp, n_bits=100,
                      n_bit_errors=0, ber=0.0, evm_percent=3.0)
    lost = TrialReport(frame_found=False, frame_error=True, cfo_hz=1e9,
                       error="SyncError: no frame")
    agg = aggregate([ok1, ok2, lost], sp)
    assert agg["trials"] == 3
    assert agg["frame_errors"] == 1
    assert agg["fer"] == pytest.approx(1 / 3)
    assert agg["cfo_mse"] == pytest.approx(0.05, rel=1e-12)
    assert agg["bit_errors"] == 2
    assert agg["total_bits"] == 200
    assert agg["ber"] == pytest.approx(0.01)
    assert agg["evm_percent_mean"] == pytest.approx(2.0)
    assert agg["low_confidence_trials"] == 1


def test_aggregate_cfo_mse_skips_lost_frames():
    sp = 48828125.0
    lost = TrialReport(frame_found=False, frame_error=True, cfo_hz=1e9,
                       cfo_est_hz=float("nan"))
    agg = aggregate([lost], sp)
    assert np.isnan(agg["cfo_mse"])
    assert np.isnan(agg["ber"])


def full_cfg(tmp_path):
    return ScenarioConfig(
        params=OfdmParams(payload_symbols=8),
        channel=ChannelConfig(cfo_hz=2.5e9, sco_ppm=160.0, dgd_samples=7,
                              osnr_db=15.0, dac_bits=10, adc_bits=8,
                              noise_seed=3),
        sync=SyncConfig(threshold=0.4, alpha_search=7, q_max=60,
                        search_range=(5, 105), refine_cfo=False),
        trials=4, master_seed=77, random_delay_max=300,
        tail_gap_samples=800, pn_seed=0x1234,
        outdir=str(tmp_path / "out"), workers=1, label="stress")


def test_config_round_trip(tmp_path):
    cfg = full_cfg(tmp_path)
    path = serialize_config(cfg, tmp_path / "scenario.ini")
    assert parse_config(path) == cfg


def test_config_round_trip_none_fields(tmp_path):
    cfg = small_cfg(channel=ChannelConfig(osnr_db=None, dac_bits=None),
                    sync=SyncConfig(search_range=None),
                    random_delay_max=None)
    path = serialize_config(cfg, tmp_path / "scenario.ini")
    back = parse_config(path)
    assert back.channel.osnr_db is None
    assert back.sync.search_range is None
    assert back.random_delay_max is None
    assert back == cfg


def test_parse_config_rejects_unknown(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[frame]\nn_fft = 512\nbogus = 1\n")
    with pytest.raises(ParameterError, match="bogus"):
        parse_config(p)
    p2 = tmp_path / "bad2.ini"
    p2.write_text("[mystery]\nx = 1\n")
    with pytest.raises(ParameterError, match="mystery"):
        parse_config(p2)
    with pytest.raises(ParameterError):
        parse_config(tmp_path / "missing.ini")


def test_apply_override_paths():
    cfg = small_cfg()
    assert apply_override(cfg, "channel.cfo_hz", "2.5e9").channel.cfo_hz == 2.5e9
    assert apply_override(cfg, "trials", "7").trials == 7
    assert apply_override(cfg, "sync.search_range", "0,500"
                          ).sync.search_range == (0, 500)
    assert apply_override(cfg, "sync.search_range", "auto"
                          ).sync.search_range is None
    assert apply_override(cfg, "channel.osnr_db", "off").channel.osnr_db is None
    assert apply_override(cfg, "refine_cfo", "false").sync.refine_cfo is False
    assert apply_override(cfg, "frame.payload_symbols", "9"
                          ).params.payload_symbols == 9


def test_apply_override_errors():
    cfg = small_cfg()
    with pytest.raises(ParameterError):
        apply_override(cfg, "channel.nonsense", "1")
    with pytest.raises(ParameterError):
        apply_override(cfg, "sync.search_range", "0:500")
    with pytest.raises(ParameterError):
        apply_override(cfg, "refine_cfo", "maybe")


def test_field_kind():
    assert field_kind("channel.osnr_db") == "float"
    assert field_kind("threshold") == "float"
    assert field_kind("run.outdir") == "str"
    with pytest.raises(ParameterError):
        field_kind("no.such")
    with pytest.raises(ParameterError):
        field_kind("nothing")


def tree_digest(root: Path) -> dict:
    return {p.relative_to(root).as_posix():
            hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*.csv"))}


def test_run_sweep_outputs_and_determinism(tmp_path):
    def one(outdir):
        cfg = small_cfg(trials=2, outdir=str(outdir),
                        channel=ChannelConfig(osnr_db=30.0))
        return run_sweep(cfg, "channel.osnr_db", [30.0, 35.0],
                         write_trials=True)

    res = one(tmp_path / "a")
    assert res.curve is not None and len(res.curve.osnr_db) == 2
    assert [row["value"] for row in res.rows] == [30.0, 35.0]
    assert all(row["trials"] == 2 for row in res.rows)
    summary = tmp_path / "a" / "sweep_channelposnr_db.csv"
    assert summary in res.files and summary.exists()
    with open(summary, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 and rows[0]["value"] == "30"
    # per-value trial dumps requested
    assert sum(1 for f in res.files if f.name.startswith("trials_")) == 2

    one(tmp_path / "b")
    assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")


def test_run_sweep_non_osnr_field_has_no_curve(tmp_path):
    cfg = small_cfg(trials=1, outdir=str(tmp_path))
    res = run_sweep(cfg, "channel.sco_ppm", [0.0, 40.0])
    assert res.curve is None
    assert (tmp_path / "sweep_channelpsco_ppm.csv").exists()


def test_write_trial_reports_schema(tmp_path):
    reports = [run_trial(small_cfg(), 0)]
    path = write_trial_reports(reports, tmp_path / "tr.csv")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    row = rows[0]
    for col in ("scenario", "trial_index", "delay_samples", "frame_error",
                "ber", "evm_percent", "osnr_db", "error"):
        assert col in row
    assert row["osnr_db"] == "off"
    assert row["frame_error"] == "0"


def test_write_timing_trace_schema(tmp_path):
    rep_cfg = small_cfg()
    from coofdm.harness import build_tx, _trial_randomness
    bits, delay, _ = _trial_randomness(rep_cfg, 0)
    w, _, tr = build_tx(rep_cfg, bits)
    trace = timing_metric(w, SMALL, tr.pn, search_range=(0, 64))
    path = write_timing_trace(trace, tmp_path / "timing.csv")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == trace.values.size
    assert int(rows[0]["d"]) == 0
    assert float(rows[0]["metric"]) == pytest.approx(trace.values[0])


def test_write_integer_cfo_trace_schema(tmp_path):
    cfg = small_cfg()
    from coofdm.harness import build_tx, _trial_randomness
    bits, _, _ = _trial_randomness(cfg, 0)
    w, _, tr = build_tx(cfg, bits)
    res = estimate_integer_cfo(w, 0, tr, SMALL, q_max=12)
    path = write_integer_cfo_trace(res, tmp_path / "icfo.csv")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 25
    shifts = [int(r["shift"]) for r in rows]
    assert shifts == list(range(-12, 13))


def test_write_phase_slope_schema(tmp_path):
    bins = np.array([-3, -2, 2, 3])
    phases = np.array([0.1, 0.2, 0.3, 0.4])
    path = write_phase_slope(bins, phases, 1.5e-3, 0.2, tmp_path / "ps.csv")
    text = path.read_text().splitlines()
    assert text[0].startswith("# slope_m=0.0015")
    assert "intercept=0.2" in text[0]
    assert text[1] == "subcarrier,phase_rad"
    assert len(text) == 2 + bins.size


def test_write_constellation_schema(tmp_path):
    rng = np.random.default_rng(0)
    eq = rng.normal(size=(2, 3, 5)) + 1j * rng.normal(size=(2, 3, 5))
    bins = np.arange(-2, 3)
    path = write_constellation(eq, bins, tmp_path / "const.csv")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 3 * 5
    assert {r["pol"] for r in rows} == {"x", "y"}
    first = rows[0]
    assert float(first["i"]) == pytest.approx(eq[0, 0, 0].real)
    assert float(first["q"]) == pytest.approx(eq[0, 0, 0].imag)


def test_ber_curve_csv_round_trip(tmp_path):
    curve = BerCurve([12.0, 15.0, 18.0], [3.2e-2, 4.1e-3, 1.9e-4],
                     label="demo")
    path = write_ber_curve(curve, tmp_path / "curve.csv")
    back = read_ber_curve(path, label="demo")
    assert np.allclose(back.osnr_db, curve.osnr_db)
    assert np.allclose(back.ber, curve.ber, rtol=1e-12)
    assert back.label == "demo"


def test_scenario_config_validation():
    with pytest.raises(ParameterError):
        ScenarioConfig(trials=0)
    with pytest.raises(ParameterError):
        ScenarioConfig(workers=0)
    with pytest.raises(ParameterError):
        ScenarioConfig(tail_gap_samples=-1)
    with pytest.raises(ParameterError):
        ScenarioConfig(random_delay_max=-5)
