"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested operation."""


class HorizonError(ValueError):
    """A trajectory was evaluated or composed beyond its simulated horizon."""


class ConfigurationError(ValueError):
    """A configuration is structurally invalid or outside supported limits."""
