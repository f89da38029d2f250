"""Exception types shared across the toolkit."""


class NilflowError(Exception):
    """Base class for all toolkit-specific failures."""


class DimensionMismatch(NilflowError, ValueError):
    pass


class FormatError(NilflowError, ValueError):
    """Malformed definition or serialization file; carries a line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class NonzeroAverage(NilflowError):
    """Raised when a solve requires zero average but the input carries a constant
    obstruction; the obstruction is attached for reporting."""

    def __init__(self, message, obstruction=None):
        super().__init__(message)
        self.obstruction = obstruction


class Resonance(NilflowError):
    """An exactly vanishing divisor on the support of the input."""

    def __init__(self, message, mode=None):
        super().__init__(message)
        self.mode = mode


class NotACocycle(NilflowError):
    pass


class NonInvertible(NilflowError):
    """Coordinate change too large for the contraction check."""


class NoConvergence(NilflowError):
    """Newton iteration stalled or diverged; the last state is attached."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class EmptyCorpus(NilflowError, ValueError):
    pass


class ThresholdExceeded(NilflowError):
    pass


class UnrepresentableProduct(NilflowError):
    """Pointwise product would need synthesis of representation components,
    which the coefficient model deliberately does not provide."""


class ConfigError(NilflowError):
    pass


class MissingKey(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class ConfigTypeError(ConfigError, TypeError):
    """Value of a config key has the wrong type; message carries the line number."""
