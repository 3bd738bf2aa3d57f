"""Hamilton-Jacobi reach-avoid analysis for a waste-to-energy control model."""
from .grid import GridSpec, ScalarField
from .kernels import BACKEND
from .levelset import BoxSet
from .model import WteParams, scenario
from .solver import SolveConfig, SolveResult, solve

__all__ = ["BACKEND", "BoxSet", "GridSpec", "ScalarField", "SolveConfig", "SolveResult",
           "WteParams", "scenario", "solve"]
__version__ = "0.1.0"
