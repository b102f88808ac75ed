"""Shared exception types, mapped onto CLI exit codes by ganlab.cli."""


class ConfigError(ValueError):
    """Bad experiment configuration (unknown key, invalid value)."""


class NumericError(RuntimeError):
    """Non-finite value where the computation cannot continue."""
