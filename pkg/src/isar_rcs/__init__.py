"""ISAR imaging of RCS data by backprojection and smooth reweighted l1 minimization."""

from .backprojection import WindowSpec, backproject, hann_window, peak_detect
from .bpdn import SolverConfig, SolverReport, pareto_root_find, project_weighted_l1_ball, solve_bpdn
from .extraction import (GateSpec, SweepStatistics, extract_rcs, gate_image, sweep_statistics,
                         two_point_experiment)
from .geometry import C0, ImageGrid, MeasurementGeometry, PointScatterer, default_geometry
from .isr import IsrConfig, isr_solve, reweight, smooth_image, smoothing_kernel
from .scenario import Scenario, load_scenario
from .signal_model import (IsarOperator, adjoint_apply, dbsm, forward_apply, rcs_from_amplitude,
                           synthesize_measurement)

__all__ = [
    "C0", "GateSpec", "ImageGrid", "IsarOperator", "IsrConfig", "MeasurementGeometry",
    "PointScatterer", "Scenario", "SolverConfig", "SolverReport", "SweepStatistics",
    "WindowSpec", "adjoint_apply", "backproject", "dbsm", "default_geometry", "extract_rcs",
    "forward_apply", "gate_image", "hann_window", "isr_solve", "load_scenario",
    "pareto_root_find", "peak_detect", "project_weighted_l1_ball", "rcs_from_amplitude",
    "reweight", "smooth_image", "smoothing_kernel", "solve_bpdn", "sweep_statistics",
    "synthesize_measurement", "two_point_experiment",
]
