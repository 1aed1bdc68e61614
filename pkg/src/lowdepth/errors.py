"""Exception hierarchy shared across the toolkit.

Everything raised on purpose derives from LowdepthError so the CLI can map
failures to exit codes without enumerating modules.
"""


class LowdepthError(Exception):
    """Base class for all toolkit errors."""


class FormulaSyntaxError(LowdepthError):
    """Malformed formula text; carries a character position when known."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class WellFormednessError(LowdepthError):
    """Structurally invalid formula (bad constant-leaf placement, zero weight, ...)."""


class BudgetExceeded(LowdepthError):
    """An expansion or enumeration grew past the configured budget."""


class FieldUnordered(LowdepthError):
    """An order-dependent check was requested over a prime field."""


class ModeMismatch(LowdepthError):
    """Two formulas disagree on commutativity mode or coefficient field."""


class NotSkew(LowdepthError):
    """Input to a skew-only rewrite has a product gate with two non-leaf children."""


class DuplicateLeafVariable(LowdepthError):
    """A skew rewrite requires distinct variables on the leaves."""


class TooSmall(LowdepthError):
    """The formula is at most the branch parameter; callers use the base case."""


class NotSemanticallyHomogeneous(LowdepthError):
    """The expanded polynomial mixes degrees, so no single component covers it."""


class NotComputingH(LowdepthError):
    """A formula handed to the hard-instance checkers computes something else."""


class ParamOutOfRange(LowdepthError):
    """Hard-instance parameters outside the supported range."""


class UniverseTooLarge(LowdepthError):
    """The requested variable universe exceeds the configured cap."""


class InfeasibleShape(LowdepthError):
    """Requested random formula shape cannot exist (e.g. degree above size)."""


class InternalInvariantError(LowdepthError):
    """An internal consistency check failed; indicates IR corruption, not bad input."""
