"""CSV readers and writers for RCS data, image rasters and experiment output."""

from __future__ import annotations

import csv
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .geometry import ImageGrid, MeasurementGeometry

RCS_HEADER = ["freq_hz", "angle_deg", "re", "im"]
RASTER_HEADER = ["x_m", "y_m", "re", "im", "mag_db"]
PEAKS_HEADER = ["x_m", "y_m", "mag_db"]
SWEEP_HEADER = ["position_deg", "extracted_dbsm"]
SWEEP_SUMMARY_HEADER = ["mean_dbsm", "p10_dbsm", "p90_dbsm"]


class CsvFormatError(ValueError):
    """Malformed input file; ``line`` is the 1-based line number (0 if global)."""

    def __init__(self, path, line: int, message: str):
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def _open_writer(path, timestamp: bool):
    fh = open(path, "w", newline="")
    if timestamp:
        fh.write(f"# generated {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
    return fh, csv.writer(fh, lineterminator="\n")


def _data_rows(path, header):
    """Yield ``(line_number, fields)`` for data rows, checking the header.

    Lines starting with ``#`` are skipped.
    """
    with open(path, newline="") as fh:
        seen_header = False
        for lineno, line in enumerate(fh, 1):
            if line.startswith("#") or not line.strip():
                continue
            fields = next(csv.reader([line]))
            if not seen_header:
                if [f.strip() for f in fields] != header:
                    raise CsvFormatError(path, lineno, f"expected header {','.join(header)}")
                seen_header = True
                continue
            if len(fields) != len(header):
                raise CsvFormatError(path, lineno,
                                     f"expected {len(header)} columns, found {len(fields)}")
            yield lineno, fields
        if not seen_header:
            raise CsvFormatError(path, 0, "file is empty")


def _floats(path, lineno, fields):
    try:
        return [float(f) for f in fields]
    except ValueError as exc:
        raise CsvFormatError(path, lineno, str(exc)) from None


def write_rcs_csv(path, geom: MeasurementGeometry, y, timestamp: bool = False) -> None:
    y = np.asarray(y).ravel()
    if y.size != geom.size:
        raise ValueError(f"y has length {y.size}, expected {geom.size}")
    f, _ = geom.sample_axes()
    deg = np.repeat(geom.angles_deg[None, :], geom.n_freq, axis=0).ravel()
    fh, wr = _open_writer(path, timestamp)
    with fh:
        wr.writerow(RCS_HEADER)
        for fm, am, v in zip(f, deg, y):
            wr.writerow([fmt(fm), fmt(am), fmt(v.real), fmt(v.imag)])


def load_rcs_csv(path) -> tuple[MeasurementGeometry, np.ndarray]:
    """Read an RCS file written frequency-outer, angle-inner."""
    rows = [(ln, _floats(path, ln, fl)) for ln, fl in _data_rows(path, RCS_HEADER)]
    if not rows:
        raise CsvFormatError(path, 0, "no data rows")
    data = np.array([r for _, r in rows])
    lines = [ln for ln, _ in rows]
    if not np.all(np.isfinite(data)):
        bad = int(np.nonzero(~np.all(np.isfinite(data), axis=1))[0][0])
        raise CsvFormatError(path, lines[bad], "non-finite value")
    freqs = data[:, 0]
    n_angle = int(np.argmax(freqs != freqs[0])) if np.any(freqs != freqs[0]) else freqs.size
    if freqs.size % n_angle:
        raise CsvFormatError(path, 0, f"{freqs.size} rows is not a multiple of {n_angle} angles")
    n_freq = freqs.size // n_angle
    f_axis = freqs[::n_angle]
    a_axis = data[:n_angle, 1]
    for i in range(freqs.size):
        fi, ai = divmod(i, n_angle)
        if data[i, 0] != f_axis[fi] or data[i, 1] != a_axis[ai]:
            raise CsvFormatError(path, lines[i], "rows are not a frequency-outer, angle-inner grid")
    if n_freq > 1 and np.any(np.diff(f_axis) <= 0):
        raise CsvFormatError(path, 0, "frequency axis is not strictly increasing")
    if n_angle > 1 and np.any(np.diff(a_axis) <= 0):
        raise CsvFormatError(path, 0, "angle axis is not strictly increasing")
    geom = MeasurementGeometry.from_degrees(f_axis, a_axis)
    return geom, data[:, 2] + 1j * data[:, 3]


def magnitude_db(image) -> np.ndarray:
    """``20 log10(|x| / max|x|)``; an all-zero image maps to ``-inf``."""
    mag = np.abs(np.asarray(image)).ravel()
    peak = mag.max() if mag.size else 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 20.0 * np.log10(mag / peak) if peak > 0 else np.full(mag.shape, -np.inf)
    return out


def write_raster_csv(path, grid: ImageGrid, image, timestamp: bool = False) -> None:
    image = np.asarray(image).ravel()
    if image.size != grid.size:
        raise ValueError(f"image has length {image.size}, expected {grid.size}")
    px, py = grid.points()
    db = magnitude_db(image)
    fh, wr = _open_writer(path, timestamp)
    with fh:
        wr.writerow(RASTER_HEADER)
        for x, y, v, d in zip(px, py, image, db):
            wr.writerow([fmt(x), fmt(y), fmt(v.real), fmt(v.imag), fmt(d)])


def load_raster_csv(path, grid: ImageGrid) -> np.ndarray:
    """Read a raster and check it matches ``grid`` point for point."""
    rows = [(ln, _floats(path, ln, fl)) for ln, fl in _data_rows(path, RASTER_HEADER)]
    if len(rows) != grid.size:
        raise CsvFormatError(path, 0, f"{len(rows)} pixels, grid has {grid.size}")
    px, py = grid.points()
    out = np.empty(grid.size, dtype=np.complex128)
    tol = 1e-9 * grid.spacing
    for j, (ln, (x, y, re, im, _)) in enumerate(rows):
        if abs(x - px[j]) > tol or abs(y - py[j]) > tol:
            raise CsvFormatError(path, ln, "pixel position does not match the scenario grid")
        out[j] = complex(re, im)
    return out


def write_peaks_csv(path, peaks, timestamp: bool = False) -> None:
    top = max((m for _, m in peaks), default=0.0)
    fh, wr = _open_writer(path, timestamp)
    with fh:
        wr.writerow(PEAKS_HEADER)
        for (x, y), m in peaks:
            wr.writerow([fmt(x), fmt(y), fmt(20 * np.log10(m / top))])


def write_sweep_csv(path, stats, timestamp: bool = False) -> None:
    """Per-placement values followed by a summary header and line."""
    fh, wr = _open_writer(path, timestamp)
    with fh:
        wr.writerow(SWEEP_HEADER)
        for a, v in zip(stats.positions_deg, stats.values_dbsm):
            wr.writerow([fmt(a), fmt(v)])
        wr.writerow(SWEEP_SUMMARY_HEADER)
        wr.writerow([fmt(stats.mean_dbsm), fmt(stats.p10_dbsm), fmt(stats.p90_dbsm)])


def read_sweep_summary(path) -> tuple[float, float, float]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    if len(lines) < 2 or lines[-2].split(",") != SWEEP_SUMMARY_HEADER:
        raise CsvFormatError(path, 0, "missing sweep summary")
    mean, p10, p90 = (float(v) for v in lines[-1].split(","))
    return mean, p10, p90
