"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage problems (ValueError and
argparse errors) exit 2, FormatError and OS-level I/O exit 3,
NumericsError exits 4.
"""


class CinemaloopError(Exception):
    """Base class for package-specific failures."""


class FormatError(CinemaloopError):
    """A file is malformed: bad magic, truncation, or invalid content."""


class NumericsError(CinemaloopError):
    """A computation produced non-finite or otherwise unusable values."""
