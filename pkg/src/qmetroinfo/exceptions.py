"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input fails a structural or numerical validity check."""


class DimensionCapError(ValidationError):
    """A requested operator or state would exceed the configured dimension cap."""


class UnsupportedConfigurationError(ValidationError):
    """The inputs are valid but describe a configuration outside supported scope."""


class ResourceLimitError(RuntimeError):
    """A computation would exceed a configured resource budget (e.g. quadrature nodes)."""
