"""ASCII rail-file exchange and the dual-polarization container."""

import numpy as np
import pytest

from coofdm.params import ParameterError
from coofdm.waveform import (
    RAIL_SUFFIXES,
    DualPolWaveform,
    WaveformFormatError,
    export_waveform,
    import_waveform,
)

ROUND_TRIP_TOL = 1e-11  # 12 significant digits in the files


def make_waveform(n=257, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n) + 1j * rng.normal(size=n)
    y = rng.normal(size=n) + 1j * rng.normal(size=n)
    return DualPolWaveform(x, y, 25e9)


def test_export_writes_four_rails(tmp_path):
    w = make_waveform()
    paths = export_waveform(w, tmp_path / "cap")
    assert [p.name for p in paths] == [f"cap{s}" for s in RAIL_SUFFIXES]
    for p in paths:
        lines = p.read_text().splitlines()
        assert len(lines) == len(w)
        float(lines[0])  # single parseable column


def test_round_trip(tmp_path):
    w = make_waveform()
    export_waveform(w, tmp_path / "cap")
    back = import_waveform(tmp_path / "cap")
    scale = np.abs(w.x).max()
    assert np.abs(back.x - w.x).max() < ROUND_TRIP_TOL * scale
    assert np.abs(back.y - w.y).max() < ROUND_TRIP_TOL * scale
    assert back.sample_rate == 25e9


def test_import_sample_rate_parameter(tmp_path):
    export_waveform(make_waveform(16), tmp_path / "cap")
    back = import_waveform(tmp_path / "cap", sample_rate=10e9)
    assert back.sample_rate == 10e9


def test_missing_rail_file(tmp_path):
    export_waveform(make_waveform(16), tmp_path / "cap")
    (tmp_path / f"cap{RAIL_SUFFIXES[2]}").unlink()
    with pytest.raises(WaveformFormatError, match="missing"):
        import_waveform(tmp_path / "cap")


def test_bad_line_reports_position(tmp_path):
    export_waveform(make_waveform(16), tmp_path / "cap")
    bad = tmp_path / f"cap{RAIL_SUFFIXES[0]}"
    lines = bad.read_text().splitlines()
    lines[4] = "not-a-number"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(WaveformFormatError, match=":5"):
        import_waveform(tmp_path / "cap")


def test_multi_column_line_rejected(tmp_path):
    export_waveform(make_waveform(16), tmp_path / "cap")
    bad = tmp_path / f"cap{RAIL_SUFFIXES[1]}"
    bad.write_text("0.0 1.0\n" + bad.read_text())
    with pytest.raises(WaveformFormatError, match="expected one value"):
        import_waveform(tmp_path / "cap")


def test_unequal_rail_lengths(tmp_path):
    export_waveform(make_waveform(16), tmp_path / "cap")
    short = tmp_path / f"cap{RAIL_SUFFIXES[3]}"
    lines = short.read_text().splitlines()
    short.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(WaveformFormatError, match="unequal"):
        import_waveform(tmp_path / "cap")


def test_container_validation():
    with pytest.raises(ParameterError):
        DualPolWaveform(np.zeros(4), np.zeros(5))
    with pytest.raises(ParameterError):
        DualPolWaveform(np.zeros((2, 2)), np.zeros((2, 2)))
    with pytest.raises(ParameterError):
        DualPolWaveform(np.zeros(4), np.zeros(4), sample_rate=0.0)


def test_container_power_and_copy():
    w = DualPolWaveform(np.full(8, 2.0 + 0j), np.zeros(8))
    assert w.power() == pytest.approx(4.0)
    c = w.copy()
    c.x[0] = 0
    assert w.x[0] == 2.0  # deep copy
