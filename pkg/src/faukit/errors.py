"""Exception hierarchy and the process exit codes the CLI maps them to."""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class FaukitError(Exception):
    """Base class for all toolkit errors."""

    exit_code = EXIT_DATA


class UsageError(FaukitError):
    """Bad command line or config file: unknown key, missing flag, bad value."""

    exit_code = EXIT_USAGE


class DimensionError(FaukitError):
    """Array shapes or layer dimensions do not line up."""


class DomainError(FaukitError):
    """A value lies outside its documented domain."""


class ConfigError(FaukitError):
    """A generation or experiment configuration is inconsistent."""


class FormatError(FaukitError):
    """A file failed structural validation (magic, version, dims, payload)."""


class DataError(FaukitError):
    """Input data is unusable: missing file, empty set, absent annotations."""


class NumericError(FaukitError):
    """A computation produced non-finite values."""

    exit_code = EXIT_NUMERIC
