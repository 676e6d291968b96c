"""Dual-polarization complex baseband container and ASCII file exchange.

Waveforms cross tool boundaries (generator → channel → synchronizer) as four
single-column ASCII text files holding the I and Q rails of each
polarization, one decimal value per line, LF line endings, no header —
the format arbitrary-waveform generators ingest directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .params import ParameterError

#: File suffix per (polarization, rail), in canonical order.
RAIL_SUFFIXES = ("_xi.txt", "_xq.txt", "_yi.txt", "_yq.txt")

DEFAULT_SAMPLE_RATE = 25e9


class WaveformFormatError(ValueError):
    """Raised on malformed waveform files; carries file and line context."""


@dataclass
class DualPolWaveform:
    """Complex sample streams for the x and y polarizations."""

    x: np.ndarray
    y: np.ndarray
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.complex128)
        self.y = np.asarray(self.y, dtype=np.complex128)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ParameterError("x and y must be 1-D arrays of equal length")
        if self.sample_rate <= 0:
            raise ParameterError("sample_rate must be positive")

    def __len__(self) -> int:
        return self.x.size

    def copy(self) -> "DualPolWaveform":
        return DualPolWaveform(self.x.copy(), self.y.copy(), self.sample_rate)

    def power(self) -> float:
        """Mean per-sample power summed over both polarizations."""
        return float(np.mean(np.abs(self.x) ** 2) + np.mean(np.abs(self.y) ** 2))


def export_waveform(w: DualPolWaveform, basepath: str | Path) -> list[Path]:
    """Write the four rail files `<base>_xi/_xq/_yi/_yq.txt`.

    Values are printed with 12 significant digits in scientific notation.

    Returns:
        The four file paths written, in canonical rail order.
    """
    base = Path(basepath)
    if base.parent and not base.parent.exists():
        base.parent.mkdir(parents=True, exist_ok=True)
    rails = (w.x.real, w.x.imag, w.y.real, w.y.imag)
    paths = []
    for suffix, rail in zip(RAIL_SUFFIXES, rails):
        path = base.with_name(base.name + suffix)
        with open(path, "w", newline="\n") as fh:
            fh.writelines(f"{v:.12e}\n" for v in rail)
        paths.append(path)
    return paths


def import_waveform(basepath: str | Path,
                    sample_rate: float = DEFAULT_SAMPLE_RATE) -> DualPolWaveform:
    """Read the four rail files back into a waveform.

    The ASCII format carries no sample-rate metadata, so the rate is a
    parameter (default 25 GS/s).

    Raises:
        WaveformFormatError: missing file, non-numeric or multi-column line
            (reported with its 1-based line number), or rail length mismatch.
    """
    base = Path(basepath)
    rails = []
    for suffix in RAIL_SUFFIXES:
        path = base.with_name(base.name + suffix)
        if not path.exists():
            raise WaveformFormatError(f"missing waveform file: {path}")
        rails.append(_read_column(path))
    lengths = {len(r) for r in rails}
    if len(lengths) != 1:
        raise WaveformFormatError(
            f"rail files of {base} have unequal lengths: "
            f"{[len(r) for r in rails]}"
        )
    xi, xq, yi, yq = rails
    return DualPolWaveform(xi + 1j * xq, yi + 1j * yq, sample_rate)


def _read_column(path: Path) -> np.ndarray:
    """Parse one single-column decimal file, pinpointing bad lines."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if len(fields) != 1:
                raise WaveformFormatError(
                    f"{path}:{lineno}: expected one value, got {len(fields)}"
                )
            try:
                values.append(float(fields[0]))
            except ValueError:
                raise WaveformFormatError(
                    f"{path}:{lineno}: not a decimal number: {fields[0]!r}"
                ) from None
    return np.array(values, dtype=np.float64)
