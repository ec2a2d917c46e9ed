"""Shared exception types."""


class CapExceeded(RuntimeError):
    """An exact enumeration would blow past the desk-scale caps."""


class ConfigError(ValueError):
    """A config file or law string failed strict validation."""
