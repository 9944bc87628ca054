"""Exception types. Each carries the CLI exit code it maps to."""


class CopulaScenError(Exception):
    exit_code = 3


class DataError(CopulaScenError, ValueError):
    """Bad or insufficient input data (exit code 3)."""

    exit_code = 3


class ConfigError(CopulaScenError, ValueError):
    """Invalid configuration or CLI usage (exit code 2)."""

    exit_code = 2


class NotPSDError(CopulaScenError, ValueError):
    """A correlation matrix is not positive semidefinite."""

    exit_code = 3
