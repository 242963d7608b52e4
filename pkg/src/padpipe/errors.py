"""Exception hierarchy shared across the package.

DataError maps to CLI exit code 2 (bad inputs: manifests, map files,
feature files, model files). Everything else unexpected maps to exit 3.
"""


class PadError(Exception):
    """Base class for all package errors."""


class DataError(PadError):
    """Invalid or inconsistent input data (files, manifests, dimensions)."""


class ManifestError(DataError):
    """Manifest parse or invariant failure. Carries the offending line."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ProtocolError(PadError):
    """Protocol specification cannot be resolved against the manifests."""


class ConvergenceError(PadError):
    """An iterative fit failed to converge within its budget."""
