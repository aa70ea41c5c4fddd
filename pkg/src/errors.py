"""Exception types raised by the simulator.

All of them derive from ValueError so that callers written against plain
ValueError checks keep working.
"""


class BullwhipError(ValueError):
    """Base class for every error raised by this package."""


class ParameterError(BullwhipError):
    """Invalid demand parameters. The message names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigurationError(BullwhipError):
    """Invalid batching geometry or experiment configuration."""

    def __init__(self, message: str, fields: tuple[str, ...] = ()):
        self.fields = fields
        super().__init__(message)


class InputError(BullwhipError):
    """Empty, malformed or mismatched input data."""


class DomainError(BullwhipError):
    """A quantity is undefined for the given input (e.g. zero variance)."""
