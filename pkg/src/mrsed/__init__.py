"""Multiresolution finite-difference solver for degenerate sedimentation-consolidation."""
from .driver import MRConfig, RunMetrics, run_mr, run_mr_only, run_reference, speedup
from .model import CompressionModel, ConstantProfile, CustomFlux, FluxModel, PiecewiseConstant, ProblemKind, ProblemSpec
from .mr import GridHierarchy, ThresholdStrategy, decode, encode, truncate
from .scheme import Discretization, SchemeConfig, compute_dt, eo_flux

__version__ = "0.1.0"
