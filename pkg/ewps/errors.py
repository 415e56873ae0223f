"""Exception hierarchy shared by the library and the CLI."""


class EwpsError(ValueError):
    """Base class for all errors raised by this package."""


class DomainError(EwpsError):
    """An argument lies outside the domain of the operation."""


class UnsupportedCharacterizationError(EwpsError):
    """No parallel-system characterization is known for the family."""


class HazardOverflowError(EwpsError):
    """Survival underflowed to zero, so the hazard cannot be evaluated."""


class SamplingError(EwpsError):
    """Inverse-transform sampling ran past its probability cap."""


class NumericError(EwpsError):
    """A numerical evaluation produced a non-finite or invalid value."""


class NestingError(EwpsError):
    """Likelihood-ratio inputs are not consistent with nested models."""


class CovarianceError(EwpsError):
    """Observed information is not positive definite."""


class InputError(EwpsError):
    """Bad user input: missing column, non-numeric cell, malformed file."""
