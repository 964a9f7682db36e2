"""Exception hierarchy.

Input problems derive from ``ValueError`` so callers can treat them as bad
arguments; numerical breakdowns derive from :class:`NumericalError` (the CLI
maps these to exit status 3).
"""


class NumericalError(ArithmeticError):
    """A computation could not be carried out to the requested accuracy."""


class QuadratureError(NumericalError):
    pass


class SeriesDivergenceError(NumericalError):
    pass


class FidelityUnderflowError(NumericalError):
    pass


class InfeasibleTradeoffError(NumericalError):
    pass


class TruncationError(ValueError):
    """Requested state needs more Fock levels than the truncation budget."""


class SupportBudgetError(ValueError):
    pass


class RejectionRateError(ValueError):
    """Too many non-positive coupling draws; the spread is too wide for g."""


class LinearizationError(ValueError):
    """First-order phase expansion undefined (zero global detuning)."""
