"""Exception types shared across the toolkit."""


class RydrxError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(RydrxError, ValueError):
    """A physical or numerical parameter is out of its valid range."""


class InputError(RydrxError, ValueError):
    """Malformed input data (empty, unsorted, mismatched shapes)."""


class ConvergenceError(RydrxError, RuntimeError):
    """An adaptive numerical routine hit its refinement cap."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DegenerateOperatingPoint(RydrxError, RuntimeError):
    """A finite-difference derivative is indistinguishable from zero."""

    def __init__(self, message, estimate=0.0):
        super().__init__(message)
        self.estimate = estimate


class SamplingError(RydrxError, ValueError):
    """Sample rate or record length violates a Nyquist/length requirement."""


class ResolutionError(RydrxError, ValueError):
    """Spectral features required by a fit cannot be resolved."""


class FitError(RydrxError, RuntimeError):
    """A least-squares fit failed or produced an unusable result."""


class OutOfRangeError(RydrxError, ValueError):
    """A requested crossing does not occur within the sampled range."""


class SyncError(RydrxError, ValueError):
    """Symbol timing metadata is inconsistent with the record."""


class ConfigError(RydrxError, ValueError):
    """Scenario configuration failed validation.

    ``field`` names the offending key using dotted notation.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
