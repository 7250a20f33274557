"""Exception hierarchy shared by all spurcheck modules."""


class SpurcheckError(Exception):
    """Base class for every error raised by this package."""


class InputError(SpurcheckError, ValueError):
    """Malformed arguments: length mismatch, empty batch, bad parameter."""


class DegenerateInputError(InputError):
    """Input has no rank variation (all values tied) or too few usable pairs."""


class SingularDesignError(InputError):
    """Design matrix is rank deficient."""


class AlignmentError(InputError):
    """Two or more series do not share enough years."""


class SchemaError(InputError):
    """A CSV input lacks a required column."""


class FormatError(InputError):
    """A CSV input cannot be parsed at all."""


class EstimationError(SpurcheckError, RuntimeError):
    """Likelihood maximisation failed.

    ``diagnostics`` carries whatever the best attempt produced (order,
    last parameter vector, log-likelihood, optimizer message).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
