from .core import (
    INT_BACKEND,
    CountMatrix,
    MatrixOverflowError,
    identity,
    multiply_counts,
    theoretical_cost,
)
from .calibration import (
    CalibrationError,
    CalibrationTable,
    DEFAULT_PROBE_DIMS,
    calibrate,
    estimate_runtime,
)

__all__ = [
    "INT_BACKEND",
    "CountMatrix",
    "MatrixOverflowError",
    "identity",
    "multiply_counts",
    "theoretical_cost",
    "CalibrationError",
    "CalibrationTable",
    "DEFAULT_PROBE_DIMS",
    "calibrate",
    "estimate_runtime",
]
