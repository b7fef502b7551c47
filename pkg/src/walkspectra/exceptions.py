"""Exception and warning classes raised by walkspectra."""


class WalkSpectraError(Exception):
    """Base class for all walkspectra errors."""


class MalformedOperatorError(WalkSpectraError, ValueError):
    """Raised when step/coin data do not describe a well-formed operator."""


class DimensionMismatchError(WalkSpectraError, ValueError):
    """Raised when lattice rank or coin dimension of two objects disagree."""


class AliasingError(WalkSpectraError, ValueError):
    """Raised when a torus grid is too small to represent a lattice state
    without wrap-around."""


class PreconditionError(WalkSpectraError):
    """Raised when the inputs are valid but a mathematical precondition
    (certified eigenvalue, spectral gap, dimension restriction) fails."""


class EigensolverError(WalkSpectraError, ArithmeticError):
    """Raised when pointwise diagonalization fails at some grid point.

    The offending point is available as ``grid_index``.
    """

    def __init__(self, msg, grid_index=None):
        super().__init__(msg)
        self.grid_index = grid_index


class ConfigError(WalkSpectraError, ValueError):
    """Raised for malformed or inconsistent walk configuration documents."""

    def __init__(self, msg, field=None):
        super().__init__(msg if field is None else f"{field}: {msg}")
        self.field = field


class DiscriminantProximityWarning(UserWarning):
    """Grid points lie on (or numerically near) a band collision, where the
    pointwise eigenprojection is not determined by the grid point alone."""


class SpectrumGroupingWarning(UserWarning):
    """Eigenvalues are close enough that grouping them into distinct
    eigenvalues is ambiguous at the chosen tolerance."""
