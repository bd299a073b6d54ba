"""Exception types shared across the package."""


class RadialDiracError(Exception):
    """Base class for all package-specific failures."""


class SingularArgumentError(RadialDiracError, ValueError):
    """Function evaluated at a pole (z = 0 for the singular Riccati forms)."""


class BranchPointError(RadialDiracError, ValueError):
    """Spectral parameter inside the exclusion radius of lambda = ±m."""


class AmbiguousRimError(RadialDiracError, ValueError):
    """Real lambda inside the gap (-m, m) given without a rim tag."""


class ValidityCeilingError(RadialDiracError, ValueError):
    """2 |Im k| gamma exceeds the configured integration ceiling."""


class RouteMismatchError(RadialDiracError, ArithmeticError):
    """The two independent Jost-function routes disagree beyond tolerance."""


class InitializationAccuracyError(RadialDiracError, ArithmeticError):
    """Richardson consistency check of a limit/initial condition failed."""


class PhaseContinuationError(RadialDiracError, ArithmeticError):
    """Boundary phase steps could not be refined below pi/2."""


class WindingMismatchError(RadialDiracError, ArithmeticError):
    """Parent-cell winding does not equal the sum over its children."""


class GapClassificationError(RadialDiracError, ArithmeticError):
    """A real gap zero could not be classified after epsilon refinement."""


class ConfigError(RadialDiracError, ValueError):
    """Malformed potential file or run configuration."""
