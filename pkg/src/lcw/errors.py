"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand shapes or dimensions are incompatible."""


class DomainError(ValueError):
    """An input value is outside an operation's mathematical domain."""


class ConfigError(ValueError):
    """A run configuration file is invalid (maps to CLI exit code 2)."""


class DataError(ValueError):
    """A data file is malformed or truncated (maps to CLI exit code 3)."""


class CompatibilityError(ValueError):
    """A checkpoint lacks a required network or has incompatible dims (exit code 4)."""
