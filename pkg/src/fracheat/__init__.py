"""Fractional heat equation solvers and inverse coefficient/source recovery in 1-D."""
from .errors import AssumptionViolation, FracHeatError, NumericalFailure, UsageError
from .grids import FractionalOrder, LineGrid, SpaceGrid, TimeGrid

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolation",
    "FracHeatError",
    "NumericalFailure",
    "UsageError",
    "FractionalOrder",
    "LineGrid",
    "SpaceGrid",
    "TimeGrid",
]
