"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: usage problems exit 1,
DataError exits 2, NumericalError exits 3.
"""


class SkelactError(Exception):
    """Base class for all package errors."""


class DataError(SkelactError):
    """Malformed input data or a violated data contract."""


class ParseError(DataError):
    """File could not be parsed; message names the offending location."""


class NumericalError(SkelactError):
    """A numerical routine failed (non-SPD matrix, divergence, ...)."""


class ModelFormatError(DataError):
    """Model archive is corrupt, truncated, or has the wrong version."""
