class DataError(Exception):
    """Bad input data: missing files, malformed rows, broken contracts between artifacts."""


class ConfigError(Exception):
    """Invalid configuration or parameter values."""
