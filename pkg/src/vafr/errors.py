"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a formula is defined."""


class ConfigError(ValueError):
    """A configuration document failed validation."""
