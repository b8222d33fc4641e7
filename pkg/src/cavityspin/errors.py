"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid, unknown or out-of-range configuration value."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")


class DomainError(ValueError):
    """A formula was evaluated outside the range where it is defined."""


class UsageError(ValueError):
    """Bad arguments to an operation (empty grid, unsorted timeline, ...)."""


class StatisticsError(RuntimeError):
    """Too few events or samples to form the requested estimate."""


class FitError(RuntimeError):
    """A least-squares fit failed to converge."""

    def __init__(self, message, residual_norm=float("nan")):
        self.residual_norm = residual_norm
        super().__init__(f"{message} (residual norm {residual_norm:.6g})")


class BoundViolation(RuntimeError):
    """The thinning sampler saw an intensity above its declared bound."""
