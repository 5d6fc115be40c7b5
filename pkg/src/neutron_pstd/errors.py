"""Exception hierarchy shared by the library and the command-line tool."""


class NeutronPSTDError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(NeutronPSTDError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigurationError(NeutronPSTDError, ValueError):
    """A simulation set-up is inconsistent (layout overflow, leaking potential, ...)."""


class IngestionError(NeutronPSTDError, ValueError):
    """A data file could not be parsed.

    ``offset`` is the byte offset at which the problem was detected, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DivergenceError(NeutronPSTDError, FloatingPointError):
    """The leapfrog iteration produced non-finite or runaway values."""

    def __init__(self, message, step=None, region=None):
        super().__init__(message)
        self.step = step
        self.region = region


class SteadyStateTimeout(NeutronPSTDError, RuntimeError):
    """The run hit ``max_steps`` before the surface phasors settled."""

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class QuadratureError(NeutronPSTDError, ArithmeticError):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved
