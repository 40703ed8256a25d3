"""Exception types raised by the library."""


class SubPlanckError(Exception):
    """Base class for all library errors."""


class NumericalGuardError(SubPlanckError, ArithmeticError):
    """A numerical consistency check failed (imaginary residue, bound violation)."""


class NullStateError(SubPlanckError, ValueError):
    """The requested operator recipe annihilates the state."""


class UnsupportedFamilyError(SubPlanckError, ValueError):
    """No closed form is available for this state family."""


class TruncationError(SubPlanckError, ArithmeticError):
    """A Fock-space vector carries too much weight near its cutoff."""


class NoCentralContourError(SubPlanckError, ValueError):
    """No closed contour encloses the phase-space origin on the grid."""
