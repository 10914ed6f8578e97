"""Iterative smooth reweighting around the weighted BPDN solver.

Each pass smooths the magnitude of the previous image with a linear
cone kernel of radius ``d`` and solves the BPDN problem again with
weights ``1 / (smoothed + eta)``. Pixels near strong responses get small
weights, so the solution gathers around each scattering centre as a
compact cluster instead of a spread of isolated spikes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .bpdn import SolverConfig, SolverReport, solve_bpdn
from .geometry import ImageGrid, MeasurementGeometry
from .signal_model import IsarOperator

logger = logging.getLogger(__name__)

SMALLEST_NONZERO = "smallest_nonzero"


@dataclass
class IsrConfig:
    """``d=None`` means two grid spacings; ``eta`` is either
    ``"smallest_nonzero"`` or a fixed positive number."""

    d: float | None = None
    iterations: int = 4
    eta: str | float = SMALLEST_NONZERO
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.d is not None and not self.d > 0:
            raise ValueError("d must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.eta != SMALLEST_NONZERO and not float(self.eta) > 0:
            raise ValueError("fixed eta must be > 0")

    def radius(self, grid: ImageGrid) -> float:
        return 2.0 * grid.spacing if self.d is None else float(self.d)


def smoothing_kernel(delta_r, d: float):
    """Cone kernel ``1 - delta_r / d`` for ``delta_r < d``, zero otherwise."""
    delta_r = np.asarray(delta_r, dtype=float)
    out = np.where(delta_r < d, 1.0 - delta_r / d, 0.0)
    return out if out.ndim else float(out)


def kernel_stencil(grid: ImageGrid, d: float) -> np.ndarray:
    """Kernel sampled on the grid offsets that lie strictly inside radius d."""
    h = int(np.ceil(d / grid.spacing))
    off = np.arange(-h, h + 1) * grid.spacing
    dist = np.hypot(off[None, :], off[:, None])
    return smoothing_kernel(dist, d)


def smooth_image(x, grid: ImageGrid, d: float) -> np.ndarray:
    """Truncated 2-D convolution of ``|x|`` with the cone kernel.

    Neighbours outside the grid are simply absent (zero fill).
    """
    mag = np.abs(grid.reshape(x))
    out = ndimage.convolve(mag, kernel_stencil(grid, d), mode="constant", cval=0.0)
    return out.ravel()


def reweight(xd, eta=SMALLEST_NONZERO) -> np.ndarray:
    """Weights ``1 / (xd + eta)``.

    With the default rule ``eta`` is the smallest positive entry of
    ``xd``. An all-zero ``xd`` yields unit weights.
    """
    xd = np.asarray(xd, dtype=float)
    if np.any(xd < 0):
        raise ValueError("smoothed image must be nonnegative")
    if eta == SMALLEST_NONZERO:
        pos = xd[xd > 0]
        if pos.size == 0:
            return np.ones_like(xd)
        eta = float(pos.min())
    # floor keeps the weights finite when the smallest entry is subnormal
    return 1.0 / (xd + max(float(eta), np.finfo(float).tiny))


class IsrError(RuntimeError):
    def __init__(self, iteration: int, cause: Exception):
        super().__init__(f"ISR iteration {iteration}: {cause}")
        self.iteration = iteration


def isr_solve(y, grid: ImageGrid, geom: MeasurementGeometry,
              config: IsrConfig | None = None, op=None, callback=None):
    """Run the reweighting loop for a fixed number of passes.

    Returns the final image and one :class:`SolverReport` per pass.
    ``callback(t, x, report)`` is invoked after every pass (1-based ``t``).
    """
    config = config or IsrConfig()
    op = op if op is not None else IsarOperator(grid, geom)
    d = config.radius(grid)
    y = np.asarray(y, dtype=np.complex128).ravel()
    reports: list[SolverReport] = []
    weights = None
    x = None
    for t in range(1, config.iterations + 1):
        try:
            if t == 1:
                solver = replace(config.solver, kappa=config.solver.resolve_kappa(y))
            else:
                weights = reweight(smooth_image(x, grid, d), config.eta)
            x, rep = solve_bpdn(y, grid, geom, replace(solver, weights=weights), op)
        except (ValueError, FloatingPointError) as exc:
            raise IsrError(t, exc) from exc
        logger.debug("ISR pass %d: residual %.4e, %d matvecs", t, rep.residual, rep.matvecs)
        reports.append(rep)
        if callback is not None:
            callback(t, x, rep)
    return x, reports
