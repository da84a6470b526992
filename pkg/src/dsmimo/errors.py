"""Exception types shared across the package."""


class NonConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations before meeting its tolerance.

    Attributes
    ----------
    last : object
        The last iterate (solver-specific record), useful for diagnosis.
    trace : list of float
        Residual (or displacement) history, one entry per iteration.
    """

    def __init__(self, message, last=None, trace=None):
        super().__init__(message)
        self.last = last
        self.trace = list(trace) if trace is not None else []


class NumericDomainError(ArithmeticError):
    """A numerical result left its mathematically guaranteed domain.

    Raised e.g. when a log-det argument is not positive definite or an
    iterate turns negative; both indicate an implementation fault or
    corrupted inputs rather than a user error.
    """


class NotDiagonalizableTogetherError(ValueError):
    """Two matrices do not share a common eigenbasis (do not commute)."""


class ConfigError(ValueError):
    """A configuration document is malformed or fails validation.

    Attributes
    ----------
    field : str or None
        Dotted path of the offending entry, e.g. ``channel.users[0].R.phi``.
    """

    def __init__(self, message, field=None):
        if field:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field
