"""Exception types shared across the toolkit."""

from __future__ import annotations


class FeatRangeError(Exception):
    """Base class for all errors raised by this package."""


# --- feature language ------------------------------------------------------

class FiaSyntaxError(FeatRangeError):
    """Malformed feature text; carries position and expectation info."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col


class FiaSemanticError(FeatRangeError):
    """Well-formed syntax with an inconsistent meaning (undeclared local,
    delay-count mismatch, bad delay interval, ...)."""


class MissingBinding(FeatRangeError):
    """A feature parameter was left unbound when grounding."""


class UnsupportedEvent(FeatRangeError):
    """Event form outside the supported @+/@- crossing set."""


# --- model layer -----------------------------------------------------------

class ModelSyntaxError(FeatRangeError):
    """Malformed .ha model text."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class ValidationError(FeatRangeError):
    """Structurally parsed model that violates a well-formedness rule."""


class UnboundedInvariant(FeatRangeError):
    """Hybridization needs a bounded invariant for every variable used by an
    affine flow row; raised with the offending location and variable."""

    def __init__(self, location: str, variable: str):
        super().__init__(
            f"invariant of location '{location}' does not bound '{variable}'")
        self.location = location
        self.variable = variable


class DimensionMismatch(FeatRangeError):
    """Polyhedron operands over different variable spaces."""


class NonRectangularFlow(FeatRangeError):
    """An operation that requires rate-interval flows met an affine row."""


class BoundViolation(FeatRangeError):
    """A structural size bound of the product construction failed; indicates
    a construction bug, not a user error."""


class ResourceExhausted(FeatRangeError):
    """A configured safety valve (symbolic-state cap, path cap) fired."""
