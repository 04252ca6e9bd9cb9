"""Exception types shared across the toolkit."""


class ParameterError(ValueError):
    """An input lies outside the domain of the model or operation."""


class RegimeError(ValueError):
    """The requested object does not exist in this (zeta, kappa) regime."""


class BudgetExceededError(RuntimeError):
    """A trajectory was asked for more deposits than its budget allows."""


class GridMemoryError(MemoryError):
    """The requested grid would not fit in the configured memory limit."""


class ConfigError(ValueError):
    """An experiment config failed schema validation."""
