"""Common utilities for the thinging-machine packages."""

import inspect
import logging
import os
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

LOGGER_NAMESPACE = "tm"

log = logging.getLogger(f"{LOGGER_NAMESPACE}.common")


class TmError(Exception):
    """Root of every error raised by the toolkit.

    ``code`` is a stable identifier matching the error names used in
    diagnostics and documentation.
    """

    code = "TmError"

    def __init__(self, message: str, span: Optional["SourceSpan"] = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is not None:
            return f"{self.code} at {self.span}: {self.message}"
        return f"{self.code}: {self.message}"


class SourceUnavailable(TmError):
    code = "SourceUnavailable"


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True, order=True)
class SourceSpan:
    """1-based location of a token; never crosses a line."""

    line: int
    column: int
    length: int = 0

    def __post_init__(self):
        if self.line < 1 or self.column < 1 or self.length < 0:
            raise ValueError(f"invalid span {self.line}:{self.column}+{self.length}")

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    """A finding attached to a model element (and a source span when known)."""

    code: str
    severity: Severity
    subject: str
    message: str
    span: Optional[SourceSpan] = field(default=None, compare=False)
    order: int = field(default=0, compare=False)

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def format_line(self) -> str:
        return f"{self.severity.value} {self.code} {self.subject}: {self.message}"

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "severity": self.severity.value,
            "code": self.code,
            "subject": self.subject,
            "message": self.message,
        }
        if self.span is not None:
            data["line"] = self.span.line
            data["column"] = self.span.column
        return data

    def __str__(self) -> str:
        return self.format_line()


def error(code: str, subject: str, message: str, span: Optional[SourceSpan] = None,
          order: int = 0) -> Diagnostic:
    return Diagnostic(code, Severity.ERROR, subject, message, span, order)


def warning(code: str, subject: str, message: str, span: Optional[SourceSpan] = None,
            order: int = 0) -> Diagnostic:
    return Diagnostic(code, Severity.WARNING, subject, message, span, order)


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)


def eprint(*args, **kwargs):
    """Print to stderr."""
    print(*args, file=sys.stderr, **kwargs)


def configure_logging(level: str = "WARNING") -> logging.Logger:
    """Route the toolkit's log records to stderr at ``level``.

    Safe to call repeatedly; only one handler is installed and it follows
    the current ``sys.stderr``.
    """
    logger = logging.getLogger(LOGGER_NAMESPACE)
    numeric = logging.getLevelName(level.upper())
    if not isinstance(numeric, int):
        raise ValueError(f"unknown log level: {level}")
    logger.setLevel(numeric)
    for handler in logger.handlers:
        if getattr(handler, "_tm_handler", False):
            handler.stream = sys.stderr
            return logger
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    handler._tm_handler = True  # type: ignore[attr-defined]
    logger.addHandler(handler)
    return logger


def get_logger(module: str) -> logging.Logger:
    """Logger under the ``tm`` namespace for a toolkit module."""
    return logging.getLogger(f"{LOGGER_NAMESPACE}.{module}")


def load_source(path) -> str:
    """Read a model source file as UTF-8 text with LF line endings.

    Raises:
        SourceUnavailable: the file is missing, unreadable or not UTF-8.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            text = f.read()
    except (OSError, UnicodeDecodeError) as e:
        raise SourceUnavailable(f"cannot read {path}: {e}") from e
    log.debug("loaded %s (%d chars)", path, len(text))
    return text.replace("\r\n", "\n")


def data_path(filename: str) -> Path:
    """Path of a data file shipped beside the calling module.

    The calling module's directory is used, so packages can bundle data
    files (e.g. ``johndoe.tm``) next to their source.
    """
    caller_frame = inspect.stack()[1]
    module_dir = os.path.dirname(caller_frame.filename)
    return Path(module_dir) / filename


def sorted_diagnostics(diagnostics: Iterable[Diagnostic]) -> List[Diagnostic]:
    """Order by (code, declaration order, message)."""
    return sorted(diagnostics, key=lambda d: (d.code, d.order, d.message, d.subject))
