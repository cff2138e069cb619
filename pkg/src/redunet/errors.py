"""Exception hierarchy shared across the package.

CLI exit codes map onto this hierarchy: DataError -> 3, NumericError -> 4.
"""


class RedunetError(Exception):
    """Base class for all package errors."""


class DataError(RedunetError):
    """Malformed files, shape mismatches, invalid memberships."""


class FormatError(DataError):
    """On-disk container violates its declared format."""


class BadMagicError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class UnknownDtypeError(FormatError):
    pass


class VersionError(FormatError):
    pass


class ShapeError(DataError):
    pass


class EmptyClassError(DataError):
    """A per-class operator was requested for a class with zero total weight."""


class NumericError(RedunetError):
    """Non-finite inputs or a failed positive-definite factorization."""
