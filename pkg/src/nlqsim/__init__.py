"""Time-ordered transfer-matrix simulation of nonlinear quantum photonic circuits."""

from .core import (FrequencyGrid, InvalidArgument, ModeSpec, NumericalFailure, PolingPattern, PumpField,
                   SegmentProfile, UnderResolvedPump, build_frequency_grid, gaussian_pump, uniform_segment)
from .propagator import TransferMatrix, propagate_segment, propagate_with_pump

__version__ = "0.1.0"
