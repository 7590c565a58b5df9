"""Exception types shared across the toolkit."""


class TreanError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(TreanError, ValueError):
    """An argument violates a documented precondition."""


class ConfigError(TreanError, ValueError):
    """A simulation or experiment configuration is invalid."""


class DetectionFailure(TreanError):
    """No consecutive correlation spike pair was found in the sample stream."""


class AmbiguousDetection(TreanError):
    """More than two packets' worth of correlation spikes were found."""


class RankDeficient(TreanError):
    """The joint estimation matrix is numerically rank deficient."""

    def __init__(self, condition_number: float):
        self.condition_number = condition_number
        super().__init__(
            f"estimation matrix condition number {condition_number:.3e} "
            "exceeds the rank threshold"
        )


class DomainError(TreanError, ValueError):
    """A model quantity is outside the domain of the defining formula."""


class NoSolution(TreanError):
    """The fixed-point residual has no sign change on the search interval."""


class ConvergenceFailure(TreanError):
    """An iterative solver did not converge; carries the iterate trace."""

    def __init__(self, message: str, trace=None):
        self.trace = list(trace) if trace is not None else []
        super().__init__(message)
