class FFRError(Exception):
    """Base class for all errors raised by ffrplan."""


class ParameterError(FFRError, ValueError):
    """A parameter is outside its valid domain."""


class ConfigurationError(FFRError, ValueError):
    """A channel profile, band plan or run configuration is malformed."""


class NumericalError(FFRError, RuntimeError):
    """A root finder or quadrature failed to converge.

    ``diagnostics`` carries whatever the failing routine knew at the time
    (bracket end points, residuals, iteration counts) so callers can report it.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{k}={v!r}" for k, v in self.diagnostics.items())
        return f"{base} ({details})"


class SolverError(NumericalError):
    """No sign change / no optimum found by a threshold solver."""
