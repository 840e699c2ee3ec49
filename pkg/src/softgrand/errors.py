"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid user-facing configuration (maps to CLI exit code 2)."""


class CodeFormatError(ConfigurationError):
    """Malformed or rank-deficient code description."""


class DesignError(ValueError):
    """A quantizer design request that cannot be satisfied."""


class NumericalError(RuntimeError):
    """An optimizer or integrator failed; carries the best value found."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
