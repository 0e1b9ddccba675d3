"""Exception hierarchy shared by all splatprep modules.

CLI exit-code mapping: ValidationError, FormatError and DataError exit 2
(bad inputs); OSError exits 3 (I/O failure).
"""


class SplatprepError(Exception):
    """Base class for all library errors."""


class ValidationError(SplatprepError):
    """Invalid parameter or violated type invariant."""


class FormatError(SplatprepError):
    """Malformed file content; message carries the byte/line position."""


class DataError(SplatprepError):
    """Well-formed file with unusable values (e.g. non-finite fields)."""


class NumericalError(SplatprepError):
    """A numeric operation could not be completed (singular matrix, ...)."""
