"""Error taxonomy shared by the library and the CLI.

Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations


class BetadropError(Exception):
    """Base class; carries the CLI exit code."""

    exit_code = 1
    category = "error"


class ConfigError(BetadropError):
    """Invalid configuration or arguments."""

    exit_code = 2
    category = "config"


class DataError(BetadropError):
    """Invalid, corrupt, or inconsistent input data."""

    exit_code = 3
    category = "data"


class NumericError(BetadropError):
    """Numeric failure (non-finite values, diverged optimization)."""

    exit_code = 4
    category = "numeric"
