"""Exception types shared across the package."""


class NFApproxError(Exception):
    """Base class for package errors."""


class ValidationError(NFApproxError, ValueError):
    """Bad input: malformed preset, violated precondition, schema failure."""


class ResourceCapError(NFApproxError):
    """An enumeration would exceed its configured cell budget."""

    def __init__(self, message, cap=None):
        super().__init__(message)
        self.cap = cap


class ConvergenceError(NFApproxError):
    """A numerical refinement failed to reach its tolerance."""


class ReportIOError(NFApproxError, OSError):
    """A report or input file could not be read or written."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path
