"""Command-line pipeline: generate → impair → sync, plus run/sweep.

Every case drives ``main(argv)`` in-process and checks exit codes and
the key=value output contract.
"""

import pytest

from coofdm.cli import EXIT_CONFIG, EXIT_IO, EXIT_NO_FRAME, EXIT_OK, main
from coofdm.waveform import import_waveform


def kv(capsys) -> dict:
    out = {}
    for line in capsys.readouterr().out.splitlines():
        if " = " in line:
            k, v = line.split(" = ", 1)
            out[k] = v
    return out


SMALL_FRAME = ["--set", "frame.payload_symbols=2"]


def test_generate_impair_sync_pipeline(tmp_path, capsys):
    clean = str(tmp_path / "clean")
    dirty = str(tmp_path / "dirty")
    assert main(["generate", *SMALL_FRAME,
                 "--set", "tail_gap_samples=600",
                 "--out", clean]) == EXIT_OK
    w = import_waveform(clean)
    assert len(w) == 4 * 558 + 600

    assert main(["impair", *SMALL_FRAME,
                 "--set", "channel.delay_samples=250",
                 "--set", "channel.cfo_hz=2.5e9",
                 "--set", "channel.sco_ppm=160",
                 "--in", clean, "--out", dirty]) == EXIT_OK
    capsys.readouterr()

    assert main(["sync", *SMALL_FRAME,
                 "--set", "sync.search_range=0,400",
                 "--in", dirty]) == EXIT_OK
    got = kv(capsys)
    assert got["frame_found"] == "1"
    assert got["d_hat_x"] == "250"
    assert got["cfo_integer_bins"] == "51"
    assert abs(float(got["cfo_hz"]) - 2.5e9) < 1e6
    assert abs(float(got["sco_ppm"]) - 160.0) < 2.0


def test_sync_writes_traces(tmp_path, capsys):
    base = str(tmp_path / "w")
    traces = tmp_path / "traces"
    assert main(["generate", *SMALL_FRAME, "--out", base]) == EXIT_OK
    assert main(["sync", *SMALL_FRAME,
                 "--set", "sync.search_range=0,64",
                 "--in", base, "--traces", str(traces)]) == EXIT_OK
    assert (traces / "timing_metric.csv").exists()
    assert (traces / "integer_cfo.csv").exists()


def test_generate_writes_bits_file(tmp_path):
    base = str(tmp_path / "w")
    bits_path = tmp_path / "bits.txt"
    assert main(["generate", *SMALL_FRAME, "--out", base,
                 "--bits", str(bits_path)]) == EXIT_OK
    lines = bits_path.read_text().splitlines()
    assert len(lines) == 2 * 2 * 416 * 4
    assert set(lines) <= {"0", "1"}


def test_bad_override_exits_config(capsys):
    assert main(["generate", "--set", "frame.bogus=1",
                 "--out", "/tmp/never"]) == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err
    assert main(["generate", "--set", "no_equals_sign",
                 "--out", "/tmp/never"]) == EXIT_CONFIG


def test_missing_input_exits_io(tmp_path, capsys):
    assert main(["sync", "--in", str(tmp_path / "nothing")]) == EXIT_IO
    assert "error" in capsys.readouterr().err


def test_noise_only_capture_exits_no_frame(tmp_path, capsys):
    base = str(tmp_path / "noise")
    # a pure-noise capture: impair an all-zero stretch is not possible
    # through the CLI, so synthesize via generate + massive noise
    assert main(["generate", *SMALL_FRAME, "--out", base]) == EXIT_OK
    dirty = str(tmp_path / "buried")
    assert main(["impair", *SMALL_FRAME,
                 "--set", "channel.osnr_db=-25",
                 "--in", base, "--out", dirty]) == EXIT_OK
    capsys.readouterr()
    assert main(["sync", *SMALL_FRAME,
                 "--set", "sync.search_range=0,600",
                 "--in", dirty]) == EXIT_NO_FRAME
    got = kv(capsys)
    assert got["frame_found"] == "0"


def test_run_command(tmp_path, capsys):
    outdir = tmp_path / "out"
    assert main(["run", *SMALL_FRAME,
                 "--set", "trials=2",
                 "--set", "random_delay_max=100",
                 "--set", f"outdir={outdir}",
                 "--set", "label=smoke"]) == EXIT_OK
    got = kv(capsys)
    assert got["trials"] == "2"
    assert got["fer"] == "0.0"
    assert (outdir / "trials_smoke.csv").exists()


def test_sweep_command(tmp_path, capsys):
    outdir = tmp_path / "out"
    assert main(["sweep", *SMALL_FRAME,
                 "--set", "trials=1",
                 "--set", f"outdir={outdir}",
                 "--field", "channel.osnr_db",
                 "--values", "28,34"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "channel.osnr_db=28.0" in out
    assert "ber curve written" in out
    assert (outdir / "sweep_channelposnr_db.csv").exists()


def test_config_file_plus_override(tmp_path, capsys):
    ini = tmp_path / "scenario.ini"
    ini.write_text(
        "[frame]\npayload_symbols = 2\n"
        "[channel]\ncfo_hz = 1e9\n"
        "[run]\ntrials = 1\nrandom_delay_max = 50\n"
        f"outdir = {tmp_path / 'o'}\n")
    assert main(["run", "--config", str(ini),
                 "--set", "channel.cfo_hz=0"]) == EXIT_OK
    got = kv(capsys)
    assert got["frame_errors"] == "0"


def test_unknown_subcommand_rejected():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
