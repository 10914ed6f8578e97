"""Backprojection imaging, Hann windowing and peak detection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ImageGrid, MeasurementGeometry
from .signal_model import IsarOperator

WINDOWS = ("none", "hann")


@dataclass(frozen=True)
class WindowSpec:
    """Data taper applied before backprojection, rescaled to unit mean."""

    kind: str = "hann"

    def __post_init__(self):
        if self.kind not in WINDOWS:
            raise ValueError(f"unknown window {self.kind!r}; expected one of {WINDOWS}")

    def weights(self, geom: MeasurementGeometry) -> np.ndarray:
        if self.kind == "none":
            return np.ones(geom.size)
        return hann_window(geom)


def _hann(n: int) -> np.ndarray:
    if n < 2:
        return np.ones(n)
    if n == 2:
        raise ValueError("a symmetric Hann window over 2 samples is identically zero")
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / (n - 1)))


def hann_window(geom: MeasurementGeometry) -> np.ndarray:
    """Separable symmetric Hann taper over (frequency, angle), mean 1.

    A single-sample axis gets weight 1; a two-sample axis is rejected
    because its symmetric Hann taper vanishes.
    """
    w = np.outer(_hann(geom.n_freq), _hann(geom.n_angle)).ravel()
    return w / w.mean()


def backproject(y, grid: ImageGrid, geom: MeasurementGeometry,
                window: WindowSpec | str = "none", op=None) -> np.ndarray:
    """Backprojection image ``(1/M) A^H (w * y)``.

    With no window an on-grid unit scatterer images to amplitude 1 at
    its own pixel.
    """
    if isinstance(window, str):
        window = WindowSpec(window)
    y = np.asarray(y, dtype=np.complex128).ravel()
    if y.size != geom.size:
        raise ValueError(f"y has length {y.size}, expected {geom.size}")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    op = op if op is not None else IsarOperator(grid, geom)
    return op.rmatvec(window.weights(geom) * y) / geom.size


def peak_detect(image, grid: ImageGrid, threshold_db: float = -10.0):
    """Strict 8-neighbourhood local maxima of ``|image|`` above a relative threshold.

    Returns a list of ``((x, y), magnitude)`` sorted by decreasing magnitude.
    Pixels on the grid border are compared with their in-grid neighbours only.
    """
    if threshold_db > 0:
        raise ValueError("threshold_db must be <= 0")
    mag = np.abs(grid.reshape(image))
    if mag.size == 0:
        raise ValueError("empty image")
    peak = mag.max()
    if peak == 0:
        return []
    padded = np.pad(mag, 1, constant_values=-np.inf)
    ny, nx = mag.shape
    strict = np.ones_like(mag, dtype=bool)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            strict &= mag > padded[1 + dy:1 + dy + ny, 1 + dx:1 + dx + nx]
    strict &= mag >= peak * 10.0 ** (threshold_db / 20.0)
    iy, ix = np.nonzero(strict)
    vals = mag[iy, ix]
    order = np.argsort(-vals, kind="stable")
    return [((float(grid.x[ix[k]]), float(grid.y[iy[k]])), float(vals[k])) for k in order]
