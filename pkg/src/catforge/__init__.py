"""Cat-state generation toolkit: heralded Gaussian circuits vs. feedforward dispersive coupling."""

from catforge.coherent import CoherentMix
from catforge.errors import (
    CatforgeError,
    DegenerateStateError,
    HeadroomError,
    InfeasibleError,
    OptimizationError,
    TruncationError,
)
from catforge.gp import GpParams

__version__ = "0.1.0"

__all__ = [
    "CatforgeError",
    "CoherentMix",
    "DegenerateStateError",
    "GpParams",
    "HeadroomError",
    "InfeasibleError",
    "OptimizationError",
    "TruncationError",
    "__version__",
]
