"""Exception types shared across the package."""


class NonadvError(Exception):
    """Base class for all package errors."""


class ConfigurationError(NonadvError):
    """A configuration value or section is invalid."""


class ContractError(NonadvError):
    """An input violates a documented precondition."""


class ParseError(NonadvError):
    """A file (dataset, schema, model, report) is malformed."""


class NumericalError(NonadvError):
    """Numerical failure, e.g. a non-finite loss or a degenerate system."""
