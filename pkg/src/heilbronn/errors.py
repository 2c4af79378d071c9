"""Exception hierarchy; the CLI maps each family onto an exit code."""


class HeilbronnError(Exception):
    exit_code = 1


class PreconditionError(HeilbronnError, ValueError):
    exit_code = 2


class DimensionMismatchError(PreconditionError):
    pass


class InsufficientDataError(PreconditionError):
    pass


class BudgetExceededError(HeilbronnError):
    exit_code = 3


class DegenerateError(HeilbronnError):
    """Raised when a configuration is not in general position."""

    exit_code = 3


class DegenerateBasisError(DegenerateError):
    pass


class CertificateError(HeilbronnError):
    """A runtime check of the product certificate failed (a bug, not bad input)."""
