"""Exception types shared across the package."""


class SheetfieldError(Exception):
    """Base class for all package errors."""


class ArgumentError(SheetfieldError, ValueError):
    """An argument violates a documented precondition."""


class ConfigurationError(SheetfieldError, ValueError):
    """A run configuration is invalid (unknown key, bad value, unstable scheme)."""


class NumericalError(SheetfieldError, ArithmeticError):
    """A computation produced non-finite values."""

    def __init__(self, message, node=None):
        super().__init__(message if node is None else f"{message} at node {node}")
        self.node = node
