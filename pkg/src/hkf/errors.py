"""Exception hierarchy shared across the package."""


class HkfError(Exception):
    """Base class for all errors raised by this package."""


class DataError(HkfError):
    """Malformed or insufficient input data (bad shapes, boundaries, files)."""


class NumericalError(HkfError):
    """Numerical failure: singular matrices, degenerate fits, diverged EM."""
