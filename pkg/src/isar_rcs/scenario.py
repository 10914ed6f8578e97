"""Scenario configuration: geometry, grid, imaging and extraction settings.

Scenario files are plain ``key = value`` text; ``#`` starts a comment.
Scatterers are given as ``scatterer_<name> = x_m, y_m, dbsm[, phase_deg]``.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .bpdn import SolverConfig
from .geometry import ImageGrid, MeasurementGeometry, PointScatterer
from .isr import SMALLEST_NONZERO, IsrConfig

METHODS = ("bp", "l1", "isr")

_FLOAT_KEYS = {
    "f_min_hz": 13.5e9, "f_max_hz": 16.5e9, "az_min_deg": -5.7, "az_max_deg": 5.7,
    "grid_extent_m": 1.0, "grid_spacing_m": 0.01, "kappa_ratio": 0.01,
    "optimality_tol": 1e-5, "gate_radius_m": 0.10, "eval_freq_hz": 15e9,
    "eval_angle_deg": 0.0, "small_dbsm": -30.0, "reference_dbsm": 0.0,
    "small_phase_deg": 0.0,
}
_INT_KEYS = {
    "n_freq": 41, "n_angle": 41, "isr_iterations": 4, "max_outer_iterations": 40,
    "max_matvecs": 20000, "n_positions": 360,
}
_STR_KEYS = {"method": "bp", "window": "hann", "isr_eta": SMALLEST_NONZERO}
_OPTIONAL_FLOAT_KEYS = ("isr_d_m",)


class ScenarioError(ValueError):
    pass


@dataclass
class Scenario:
    f_min_hz: float = 13.5e9
    f_max_hz: float = 16.5e9
    n_freq: int = 41
    az_min_deg: float = -5.7
    az_max_deg: float = 5.7
    n_angle: int = 41
    grid_extent_m: float = 1.0
    grid_spacing_m: float = 0.01
    method: str = "bp"
    window: str = "hann"
    kappa_ratio: float = 0.01
    optimality_tol: float = 1e-5
    max_outer_iterations: int = 40
    max_matvecs: int = 20000
    isr_d_m: float | None = None
    isr_iterations: int = 4
    isr_eta: str = SMALLEST_NONZERO
    gate_radius_m: float = 0.10
    eval_freq_hz: float = 15e9
    eval_angle_deg: float = 0.0
    small_dbsm: float = -30.0
    small_phase_deg: float = 0.0
    reference_dbsm: float = 0.0
    n_positions: int = 360
    scatterers: list = field(default_factory=list)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        """Build every derived object once so bad values fail before compute."""
        if self.method not in METHODS:
            raise ScenarioError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.gate_radius_m <= 0:
            raise ScenarioError("gate_radius_m must be > 0")
        if self.n_positions < 1:
            raise ScenarioError("n_positions must be >= 1")
        try:
            geom = self.geometry()
            self.grid()
            self.isr_config()
            from .backprojection import WindowSpec
            WindowSpec(self.window)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from exc
        if not geom.frequencies[0] <= self.eval_freq_hz <= geom.frequencies[-1]:
            raise ScenarioError("eval_freq_hz must lie inside the measured band")

    def geometry(self) -> MeasurementGeometry:
        return MeasurementGeometry.uniform(self.f_min_hz, self.f_max_hz, self.n_freq,
                                           self.az_min_deg, self.az_max_deg, self.n_angle)

    def grid(self) -> ImageGrid:
        return ImageGrid.square(self.grid_extent_m, self.grid_spacing_m)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(kappa_ratio=self.kappa_ratio,
                            max_outer_iterations=self.max_outer_iterations,
                            max_matvecs=self.max_matvecs,
                            optimality_tol=self.optimality_tol)

    def isr_config(self) -> IsrConfig:
        eta = self.isr_eta if self.isr_eta == SMALLEST_NONZERO else float(self.isr_eta)
        return IsrConfig(d=self.isr_d_m, iterations=self.isr_iterations, eta=eta,
                         solver=self.solver_config())

    @property
    def eval_angle(self) -> float:
        return float(np.deg2rad(self.eval_angle_deg))


def _parse_scatterer(key: str, text: str) -> PointScatterer:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (3, 4):
        raise ScenarioError(f"{key}: expected 'x_m, y_m, dbsm[, phase_deg]'")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise ScenarioError(f"{key}: {exc}") from exc
    return PointScatterer.from_dbsm(*vals)


def parse_scenario(text: str) -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",),
                                   comment_prefixes=("#",), delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise ScenarioError(f"malformed scenario: {exc}") from exc
    kwargs: dict = {}
    scatterers = []
    for key, raw in cp["scenario"].items():
        try:
            if key in _FLOAT_KEYS or key in _OPTIONAL_FLOAT_KEYS:
                kwargs[key] = float(raw)
            elif key in _INT_KEYS:
                kwargs[key] = int(raw)
            elif key in _STR_KEYS:
                kwargs[key] = raw.strip()
            elif key.startswith("scatterer"):
                scatterers.append((key, _parse_scatterer(key, raw)))
            else:
                raise ScenarioError(f"unknown scenario key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ScenarioError):
                raise
            raise ScenarioError(f"{key}: {exc}") from exc
    kwargs["scatterers"] = [s for _, s in sorted(scatterers, key=lambda kv: kv[0])]
    return Scenario(**kwargs)


def load_scenario(path=None) -> Scenario:
    """Read a scenario file; ``None`` loads the bundled default."""
    if path is None:
        text = resources.files("isar_rcs").joinpath("default_scenario.cfg").read_text()
    else:
        text = Path(path).read_text()
    return parse_scenario(text)
