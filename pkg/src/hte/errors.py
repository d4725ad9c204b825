"""Exception hierarchy shared across the package.

Two broad families matter to callers: configuration problems (bad
parameters, invalid dimensions) and data problems (unparseable files,
degenerate samples).  The CLI maps them to distinct exit codes.
"""


class HteError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HteError):
    """Invalid configuration or arguments (CLI exit code 2)."""


class DataError(HteError):
    """Invalid, degenerate, or insufficient data (CLI exit code 3)."""
