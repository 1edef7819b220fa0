"""Waveform CSV files: fixed column order, mandatory header, exact decimals."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ._layout import CHANNELS, UNITS
from .simcore import TimeSeries

HEADER = ",".join(CHANNELS)


class WaveformFormatError(ValueError):
    def __init__(self, path, line: int, message: str):
        self.line = line
        super().__init__(f"{path}: line {line}: {message}")


def write_csv(series: TimeSeries, path: str | Path) -> None:
    """Write every channel with 17 significant digits so a re-read is exact."""
    cols = [series.t] + [series[c] for c in CHANNELS[1:]]
    data = np.column_stack(cols) if len(series) else np.empty((0, len(CHANNELS)))
    with open(path, "w", newline="") as fh:
        fh.write(HEADER + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def read_csv(path: str | Path, diverged: bool = False) -> TimeSeries:
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise WaveformFormatError(path, 1, "empty file, header row missing")
    header = [h.strip() for h in lines[0].split(",")]
    if header != list(CHANNELS):
        missing = [c for c in CHANNELS if c not in header]
        detail = f"missing channel(s) {', '.join(missing)}" if missing else "columns out of order"
        raise WaveformFormatError(path, 1, f"bad header ({detail}); expected {HEADER}")
    n_cols = len(CHANNELS)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != n_cols:
            raise WaveformFormatError(path, lineno, f"expected {n_cols} fields, got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise WaveformFormatError(path, lineno, str(exc)) from None
    if len(rows) < 2:
        raise WaveformFormatError(path, len(lines) + 1, "need at least two samples")
    data = np.array(rows)
    t = data[:, 0]
    dt = np.diff(t)
    period = (t[-1] - t[0]) / (len(t) - 1)
    if not period > 0 or np.any(np.abs(dt - period) > 1e-6 * period):
        bad = int(np.argmax(np.abs(dt - period) > 1e-6 * period)) + 3
        raise WaveformFormatError(path, bad, "time column is not uniformly sampled")
    values = {c: data[:, j].copy() for j, c in enumerate(CHANNELS) if c != "t"}
    return TimeSeries(t.copy(), values, dict(zip(CHANNELS[1:], UNITS[1:])), period, diverged)
