"""Exception types raised by the estimation toolkit."""


class VolvolError(ValueError):
    """Base class for every rejection raised by the toolkit."""


class InvalidSeriesError(VolvolError):
    """Observation times or prices violate the series invariants."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InsufficientCoefficientsError(VolvolError):
    """A coefficient array does not reach the frequency an operation needs."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class ConfigError(VolvolError):
    """Estimator, experiment or run configuration is invalid."""


class ImaginaryResidueError(VolvolError):
    """A quantity that must be real carries a non-negligible imaginary part."""


class VarianceUnavailableError(VolvolError):
    """The feasible asymptotic variance is negative, so no interval exists."""


class SampleSizeError(VolvolError):
    """A sample is too small for the requested statistic."""


class DataFormatError(VolvolError):
    """Malformed input file; `line` is the 1-based line in the file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
