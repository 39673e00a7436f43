"""Exception types shared across the pipeline, mapped to CLI exit codes."""


class FlowaeError(Exception):
    """Base class for errors raised by this package."""

    exit_code = 1


class ConfigError(FlowaeError):
    """Bad configuration or unusable command invocation (exit code 1)."""

    exit_code = 1


class DataError(FlowaeError):
    """Unusable input data: missing files, empty corpora, absent classes (exit code 2)."""

    exit_code = 2


class DivergenceError(FlowaeError):
    """Training produced non-finite values (exit code 3)."""

    exit_code = 3
