"""Far-field turntable measurement operator and RCS conversions.

The target is fixed and the radar look direction rotates. A point at
``(x, y)`` seen at frequency ``f`` and azimuth ``theta`` contributes the
two-way phase ``exp(-i 2k (x cos(theta) + y sin(theta)))``, ``k = 2 pi f / c0``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .geometry import ImageGrid, MeasurementGeometry, PointScatterer


def _check_finite(v: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")


class IsarOperator(LinearOperator):
    """Matrix-free forward operator ``A`` mapping a grid image to RCS amplitudes.

    The phase is separable per sample, so ``A x`` is evaluated as a
    pair of dense products against the per-axis phase tables
    ``Ex[m, ix]`` and ``Ey[m, iy]`` (``M x nx`` and ``M x ny``) instead of
    the full ``M x N`` matrix.
    """

    def __init__(self, grid: ImageGrid, geom: MeasurementGeometry):
        self.grid = grid
        self.geom = geom
        kx, ky = geom.wavevectors()
        self._ex = np.exp(-1j * np.outer(kx, grid.x))
        self._ey = np.exp(-1j * np.outer(ky, grid.y))
        self._ex_h = np.ascontiguousarray(self._ex.conj())
        self._ey_ht = np.ascontiguousarray(self._ey.conj().T)
        super().__init__(dtype=np.complex128, shape=(geom.size, grid.size))

    def _matvec(self, x):
        img = np.asarray(x, dtype=np.complex128).reshape(self.grid.shape)
        t = img @ self._ex.T  # (ny, M)
        return np.einsum("mj,jm->m", self._ey, t)

    def _rmatvec(self, y):
        y = np.asarray(y, dtype=np.complex128).ravel()
        return (self._ey_ht * y) @ self._ex_h

    def _adjoint(self):
        return _AdjointIsarOperator(self)

    def todense(self) -> np.ndarray:
        """Materialize ``A`` (only sensible for small instances)."""
        a = self._ey[:, :, None] * self._ex[:, None, :]
        return a.reshape(self.shape)


class _AdjointIsarOperator(LinearOperator):
    def __init__(self, op: IsarOperator):
        self.op = op
        super().__init__(dtype=op.dtype, shape=(op.shape[1], op.shape[0]))

    def _matvec(self, y):
        return self.op._rmatvec(y)

    def _rmatvec(self, x):
        return self.op._matvec(x)


def _validated(v, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128).ravel()
    if v.size != n:
        raise ValueError(f"{name} has length {v.size}, expected {n}")
    _check_finite(v, name)
    return v


def forward_apply(image, grid: ImageGrid, geom: MeasurementGeometry,
                  op: IsarOperator | None = None) -> np.ndarray:
    """RCS amplitudes ``y = A x`` of a grid image (length M)."""
    x = _validated(image, grid.size, "image")
    op = op or IsarOperator(grid, geom)
    return op.matvec(x)


def adjoint_apply(y, grid: ImageGrid, geom: MeasurementGeometry,
                  op: IsarOperator | None = None) -> np.ndarray:
    """Conjugate-transpose application ``A^H y`` (length N)."""
    y = _validated(y, geom.size, "y")
    op = op or IsarOperator(grid, geom)
    return op.rmatvec(y)


def synthesize_measurement(scatterers: Sequence[PointScatterer],
                           geom: MeasurementGeometry) -> np.ndarray:
    """Coherent sum of the responses of off- or on-grid point scatterers."""
    kx, ky = geom.wavevectors()
    y = np.zeros(geom.size, dtype=np.complex128)
    for s in scatterers:
        y += complex(s.amplitude) * np.exp(-1j * (kx * s.x + ky * s.y))
    _check_finite(y, "synthesized data")
    return y


def rcs_from_amplitude(y) -> np.ndarray:
    """RCS in m^2 from complex RCS amplitude."""
    return np.abs(np.asarray(y)) ** 2


def dbsm(sigma):
    """10 log10(sigma); zero maps to -inf without a warning."""
    with np.errstate(divide="ignore"):
        out = 10.0 * np.log10(np.asarray(sigma, dtype=float))
    return out if out.ndim else float(out)
