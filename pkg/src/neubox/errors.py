"""Exception hierarchy shared by the toolkit."""


class NeuboxError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(NeuboxError, ValueError):
    """Invalid user input: potential table, run config, CLI flags."""

    def __init__(self, message, key=None, line=None):
        where = []
        if key is not None:
            where.append(f"key={key!r}")
        if line is not None:
            where.append(f"line={line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.key = key
        self.line = line


class DomainError(NeuboxError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ScatteringError(NeuboxError):
    """Radial scattering solution is unphysical (node for r > 0)."""


class ConsistencyError(NeuboxError):
    """Two routes to the same quantity disagree beyond tolerance."""


class EigensolverError(NeuboxError):
    """Iterative eigensolver failed to reach the requested residual."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class PrecisionError(NeuboxError):
    """Quadrature could not reach the requested accuracy."""


class SizeError(NeuboxError):
    """Problem size exceeds the supported dense / enumeration budget."""


class RegimeError(NeuboxError):
    """Parameters fall outside the regime where a bound is defined."""


class PipelineError(NeuboxError):
    """A pipeline stage is missing an upstream dependency."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class InsufficientDataError(NeuboxError):
    """Not enough sweep points to fit a trend."""
