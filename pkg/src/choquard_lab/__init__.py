"""Ground states, decay asymptotics and nondegeneracy for the planar logarithmic Choquard equation.

Modules
-------
radial_core   geometric radial grids, ``r dr`` quadrature, shell potentials
groundstate   shooting plus scaling for the radial ground state; residuals and energy
asymptotics   decay envelope, sub/supersolution sign checks, Dawson/erfi identity
spectral      angular sectors of the linearization and the nondegeneracy certificate
cli_io        command line, run configuration, ground-state cache
"""
from .errors import (
    ChoquardError,
    ExtrapolationError,
    GridTooSmallError,
    InputDomainError,
    ScalingFailureError,
    SearchFailureError,
    SingularityError,
    StructuralError,
    WindowError,
)
from .groundstate import GroundState, find_groundstate
from .radial_core import RadialGrid, RadialProfile, make_log_grid

__version__ = "0.1.0"

__all__ = [
    "ChoquardError",
    "ExtrapolationError",
    "GridTooSmallError",
    "InputDomainError",
    "ScalingFailureError",
    "SearchFailureError",
    "SingularityError",
    "StructuralError",
    "WindowError",
    "GroundState",
    "find_groundstate",
    "RadialGrid",
    "RadialProfile",
    "make_log_grid",
]
