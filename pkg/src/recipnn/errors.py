"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
anything else -> 3 (internal error).
"""


class RecipnnError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RecipnnError):
    """Bad configuration: invalid parameter values, unknown config keys,
    malformed config files, missing required flags."""


class DataError(RecipnnError):
    """Bad input data: malformed embedding/run/qrels files, unknown ids,
    dimension mismatches, degenerate inputs an operation cannot handle."""
