"""Numerical toolkit for the half-line radial Dirac operator with a
compactly supported potential: Jost solutions and functions, modified
Fredholm determinants, spectral states (eigenvalues, resonances, anti-bound
and virtual states), counting asymptotics, and massless trace formulas."""

from .bessel import ScaledValue, double_factorial, riccati_eta, riccati_h, riccati_j
from .errors import (
    AmbiguousRimError,
    BranchPointError,
    ConfigError,
    GapClassificationError,
    InitializationAccuracyError,
    PhaseContinuationError,
    RadialDiracError,
    RouteMismatchError,
    SingularArgumentError,
    ValidityCeilingError,
    WindingMismatchError,
)
from .freemodel import (
    ResolventKernelValue,
    Solution2,
    free_jost,
    free_phi,
    free_resolvent_kernel,
    free_theta,
    omega,
    omega_trace_crosscheck,
    omega_zero,
    spectral_density,
)
from .plane import Rim, SpectralParam, quasimomentum, star
from .potential import Piece, PotentialSpec, parse_potential_file

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
