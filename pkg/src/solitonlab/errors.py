"""Exception types raised across the package."""


class SolitonLabError(Exception):
    """Base class for all package errors."""


class GridMismatchError(SolitonLabError, ValueError):
    """Fields do not share a grid shape."""


class DomainError(SolitonLabError, ValueError):
    """A parameter lies outside its admissible range."""


class SolverError(SolitonLabError, RuntimeError):
    """An iterative solver failed to converge.

    ``residual`` carries the last residual reached.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual


class PlacementError(SolitonLabError, ValueError):
    """A soliton center sits too close to the periodic seam."""


class DegeneracyError(SolitonLabError, RuntimeError):
    """The symplectic matrix is numerically singular."""


class BlowUpError(SolitonLabError, RuntimeError):
    """The evolved field became non-finite or grew without bound."""

    def __init__(self, message, time):
        super().__init__(f"{message} at t={time:.6g}")
        self.time = time


class DecompositionError(SolitonLabError, RuntimeError):
    """Newton iteration for the skew-orthogonal decomposition failed."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class TruncationGeometryError(SolitonLabError, ValueError):
    """Cutoff regions of different solitons overlap."""


class ConfigError(SolitonLabError, ValueError):
    """An experiment configuration violates a modelling assumption.

    ``assumption`` names the violated assumption letter (A)-(D) when one applies.
    """

    def __init__(self, message, assumption=None):
        prefix = f"assumption ({assumption}) violated: " if assumption else ""
        super().__init__(prefix + message)
        self.assumption = assumption
