"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class VecdenoiseError(Exception):
    pass


class ConfigError(VecdenoiseError):
    """Bad configuration file or command-line usage."""


class DataError(VecdenoiseError):
    """Malformed or inconsistent input data (embeddings, datasets)."""


class ParseError(DataError):
    """Parse failure with location information."""

    def __init__(self, message, line=None, offset=None):
        loc = ""
        if line is not None:
            loc = f" (line {line})"
        elif offset is not None:
            loc = f" (byte offset {offset})"
        super().__init__(message + loc)
        self.line = line
        self.offset = offset


class NumericalError(VecdenoiseError):
    """Numerical failure during optimization (non-finite loss etc.)."""
