"""Numerical lab for the Bohm/Madelung view of the quantum adiabatic approximation."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .grid import SpatialGrid, make_grid, deriv1, deriv2, integrate, inner  # noqa: F401
from .hamiltonian import HamiltonianSpec, HermitianOperator, build, classical_field  # noqa: F401
from .spectrum import ParameterPath, SpectrumSlice, eigensolve, gauge_fix, track_level  # noqa: F401
from .propagate import Trajectory, evolve, step  # noqa: F401
