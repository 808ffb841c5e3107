"""Exception hierarchy.

Everything raised deliberately by resonet derives from ``ResonetError``.
Argument and validation problems also derive from ``ValueError`` so that
callers using plain ``except ValueError`` keep working.
"""


class ResonetError(Exception):
    pass


class InvalidArgument(ResonetError, ValueError):
    pass


class UnsupportedTopology(ResonetError, ValueError):
    pass


class InvalidSchedule(ResonetError, ValueError):
    pass


class InvalidState(ResonetError, ValueError):
    pass


class OutOfRange(ResonetError, ValueError):
    pass


class DegenerateFit(ResonetError, ValueError):
    pass


class PhaseUndefined(ResonetError, ValueError):
    pass


class TransientRegion(ResonetError, ValueError):
    pass


class ConfigError(ResonetError, ValueError):
    """Config text failed to parse or validate.

    ``errors`` holds one human-readable message per problem, each prefixed
    with a ``line N:`` position when one is known.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class NumericalFailure(ResonetError, ArithmeticError):
    """An iterative or integrating routine could not produce a trustworthy result."""

    def __init__(self, message, **diagnostics):
        self.diagnostics = diagnostics
        if diagnostics:
            detail = ", ".join(f"{k}={v}" for k, v in diagnostics.items())
            message = f"{message} ({detail})"
        super().__init__(message)


class NumericalOverflow(NumericalFailure):
    pass
