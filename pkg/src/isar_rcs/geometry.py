"""Measurement geometry, image grid and point scatterers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

C0 = 299_792_458.0  # speed of light [m/s]


def _as_axis(values, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return arr


@dataclass(frozen=True, eq=False)
class MeasurementGeometry:
    """Frequency/azimuth sample set of a turntable RCS measurement.

    Samples are ordered row-major with frequency as the outer index and
    angle as the inner index, so sample ``m = i_f * n_angle + i_theta``.

    Parameters
    ----------
    frequencies : array_like
        Frequencies in Hz, strictly increasing.
    angles : array_like
        Azimuth angles in **radians**, strictly increasing. Use
        :meth:`from_degrees` or :meth:`uniform` at I/O boundaries.
    """

    frequencies: np.ndarray
    angles: np.ndarray
    _deg: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        f = _as_axis(self.frequencies, "frequencies")
        a = _as_axis(self.angles, "angles")
        if np.any(f <= 0):
            raise ValueError("frequencies must be positive")
        f.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "angles", a)
        if self._deg is not None:
            deg = np.array(self._deg, dtype=float)
            deg.setflags(write=False)
            object.__setattr__(self, "_deg", deg)

    @classmethod
    def from_degrees(cls, frequencies, angles_deg) -> "MeasurementGeometry":
        # keep the caller's degree values so file round trips are exact
        deg = _as_axis(angles_deg, "angles")
        return cls(frequencies, np.deg2rad(deg), deg)

    @classmethod
    def uniform(cls, f_min_hz: float, f_max_hz: float, n_freq: int,
                az_min_deg: float, az_max_deg: float,
                n_angle: int) -> "MeasurementGeometry":
        """Evenly spaced frequency and azimuth axes (endpoints included)."""
        if n_freq < 1 or n_angle < 1:
            raise ValueError("n_freq and n_angle must be >= 1")
        freqs = np.linspace(f_min_hz, f_max_hz, int(n_freq))
        angles = np.linspace(az_min_deg, az_max_deg, int(n_angle))
        return cls.from_degrees(freqs, angles)

    @property
    def n_freq(self) -> int:
        return self.frequencies.size

    @property
    def n_angle(self) -> int:
        return self.angles.size

    @property
    def size(self) -> int:
        """Number of samples M."""
        return self.n_freq * self.n_angle

    @property
    def angles_deg(self) -> np.ndarray:
        return self._deg if self._deg is not None else np.rad2deg(self.angles)

    @property
    def bandwidth(self) -> float:
        return float(self.frequencies[-1] - self.frequencies[0])

    @property
    def range_resolution(self) -> float:
        """Downrange resolution c0 / (2B) in meters (inf for a single frequency)."""
        if self.bandwidth == 0:
            return np.inf
        return C0 / (2.0 * self.bandwidth)

    def sample_axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-sample frequency and angle vectors, both of length M."""
        f, a = np.meshgrid(self.frequencies, self.angles, indexing="ij")
        return f.ravel(), a.ravel()

    def wavevectors(self) -> tuple[np.ndarray, np.ndarray]:
        """Two-way spatial frequencies ``(Kx, Ky)`` of every sample [rad/m]."""
        f, a = self.sample_axes()
        k2 = 4.0 * np.pi * f / C0
        return k2 * np.cos(a), k2 * np.sin(a)


@dataclass(frozen=True, eq=False)
class ImageGrid:
    """Square-celled Cartesian grid centred on the origin.

    The number of points per axis is always odd, so the origin is a grid
    point. Points are ordered row-major over ``(iy, ix)``; ``reshape``
    maps a flat image of length N to an ``(ny, nx)`` array.

    Parameters
    ----------
    x_extent, y_extent : float
        Full width of the imaged region in meters.
    spacing : float
        Grid spacing in meters.
    """

    x_extent: float = 1.0
    y_extent: float = 1.0
    spacing: float = 0.01
    x: np.ndarray = field(init=False, repr=False)
    y: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("x_extent", "y_extent", "spacing"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be positive and finite")
            object.__setattr__(self, name, v)
        for axis, extent in (("x", self.x_extent), ("y", self.y_extent)):
            half = int(np.floor(extent / 2.0 / self.spacing + 1e-9))
            coords = np.arange(-half, half + 1) * self.spacing
            coords.setflags(write=False)
            object.__setattr__(self, axis, coords)

    @classmethod
    def square(cls, extent: float = 1.0, spacing: float = 0.01) -> "ImageGrid":
        return cls(extent, extent, spacing)

    @property
    def nx(self) -> int:
        return self.x.size

    @property
    def ny(self) -> int:
        return self.y.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        """Number of grid points N."""
        return self.nx * self.ny

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Flat x and y coordinates of every grid point."""
        xx, yy = np.meshgrid(self.x, self.y)
        return xx.ravel(), yy.ravel()

    def reshape(self, image) -> np.ndarray:
        return np.asarray(image).reshape(self.shape)

    def index_of(self, x: float, y: float) -> int:
        """Flat index of the grid point nearest to ``(x, y)``."""
        ix = int(np.argmin(np.abs(self.x - x)))
        iy = int(np.argmin(np.abs(self.y - y)))
        return iy * self.nx + ix

    def position(self, index: int) -> tuple[float, float]:
        iy, ix = divmod(int(index), self.nx)
        return float(self.x[ix]), float(self.y[iy])

    def contains(self, x: float, y: float) -> bool:
        return (self.x[0] <= x <= self.x[-1]) and (self.y[0] <= y <= self.y[-1])


@dataclass(frozen=True)
class PointScatterer:
    """Isotropic point scatterer with complex amplitude (RCS = |amplitude|^2)."""

    x: float
    y: float
    amplitude: complex = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("scatterer position must be finite")
        if not np.isfinite(complex(self.amplitude)):
            raise ValueError("scatterer amplitude must be finite")

    @classmethod
    def from_dbsm(cls, x: float, y: float, dbsm: float,
                  phase_deg: float = 0.0) -> "PointScatterer":
        amp = 10.0 ** (dbsm / 20.0) * np.exp(1j * np.deg2rad(phase_deg))
        return cls(x, y, complex(amp))


def default_geometry() -> MeasurementGeometry:
    """13.5-16.5 GHz in 41 steps, -5.7..5.7 deg in 41 steps."""
    return MeasurementGeometry.uniform(13.5e9, 16.5e9, 41, -5.7, 5.7, 41)
