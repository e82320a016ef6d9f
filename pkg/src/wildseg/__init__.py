"""Wild Binary Segmentation 2 with Steepest-Drop-to-Low-Levels model selection."""

from .core import (
    ChangePointModel,
    PathEntry,
    PreconditionError,
    SolutionPath,
    TimeSeries,
    cusum_argmax,
    cusum_at,
    fit_piecewise_mean,
)
from .estimation import ConstantTable, calibrate_constant, default_table, interpolate_constant, iqr_estimator, mad
from .sdll import SdllConfig, detect, detect_ensemble, sdll_select
from .wbs2 import Wbs2Config, draw_intervals, median_run_ensemble, wbs2_solution_path

__all__ = [
    "ChangePointModel",
    "ConstantTable",
    "PathEntry",
    "PreconditionError",
    "SdllConfig",
    "SolutionPath",
    "TimeSeries",
    "Wbs2Config",
    "calibrate_constant",
    "cusum_argmax",
    "cusum_at",
    "default_table",
    "detect",
    "detect_ensemble",
    "draw_intervals",
    "fit_piecewise_mean",
    "interpolate_constant",
    "iqr_estimator",
    "mad",
    "median_run_ensemble",
    "sdll_select",
    "wbs2_solution_path",
]
