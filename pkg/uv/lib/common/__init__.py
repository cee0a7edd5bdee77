"""Common utilities for the thinging-machine packages."""

from .common import (
    LOGGER_NAMESPACE,
    Diagnostic,
    Severity,
    SourceSpan,
    SourceUnavailable,
    TmError,
    configure_logging,
    data_path,
    eprint,
    error,
    get_logger,
    has_errors,
    load_source,
    sorted_diagnostics,
    warning,
)

__all__ = [
    "LOGGER_NAMESPACE",
    "Diagnostic",
    "Severity",
    "SourceSpan",
    "SourceUnavailable",
    "TmError",
    "configure_logging",
    "data_path",
    "eprint",
    "error",
    "get_logger",
    "has_errors",
    "load_source",
    "sorted_diagnostics",
    "warning",
]
