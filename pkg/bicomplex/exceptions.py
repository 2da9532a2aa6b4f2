"""Exception hierarchy of the bicomplex engine."""

from typing import Any, Optional


class BicomplexError(ValueError):
    """Base class for every error raised by the engine."""


class TheoryError(BicomplexError):
    """Unknown field or coordinate, bad multi-index, or mixing of theories."""


class InhomogeneousFormError(BicomplexError):
    """A degree was requested on a form that is not homogeneous in it."""


class BidegreeError(BicomplexError):
    """An operator received a form outside of its domain."""


class JetOrderExceeded(BicomplexError):
    """A total derivative pushed a jet variable beyond the configured cap."""


class NilpotencyError(BicomplexError):
    """A perturbation series did not terminate within its degree bound.

    This signals a convention bug, not a user error.
    """


class CompatibilityError(BicomplexError):
    """A precondition gate failed; carries the offending residual."""

    def __init__(self, message: str, residual: Optional[Any] = None):
        super().__init__(message)
        self.residual = residual


class MaurerCartanError(CompatibilityError):
    """An element fails the Maurer-Cartan equation it was required to satisfy."""


class NotHamiltonianError(BicomplexError):
    """No Hamiltonian vector field can be resolved for an element."""


class MembershipError(BicomplexError):
    """An element is not a local functional (not fixed by the projector)."""


class ArityError(BicomplexError):
    """Requested arity is outside the supported range."""


class SpecParseError(BicomplexError):
    """Syntax or resolution error in a theory specification document."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        location = f" (line {line}, column {column})" if line else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column
