"""Centralized logging configuration for lnamor.

Library modules log through ``logging.getLogger(__name__)``; the handler set up
here writes every record to stderr so that report files stay untouched.
Numerical routines attach solver records with ``extra={"diagnostics": {...}}``
and the formatter appends them as ``key=value`` pairs.
"""

import logging
import os
import sys
from functools import wraps
from time import perf_counter
from typing import Any, Callable, TypeVar, cast

import numpy as np

F = TypeVar("F", bound=Callable[..., Any])

LOG_LEVEL_ENV = "LNAMOR_LOG_LEVEL"
LOG_FORMAT = "%(levelname)s [%(name)s:%(funcName)s:%(lineno)d] %(message)s"

# Set on the handler installed by setup_logging so repeated calls replace it
_HANDLER_NAME = "lnamor"


class Colors:
    """ANSI escapes used for level names on a terminal."""

    RED = "\033[91m"
    YELLOW = "\033[93m"
    CYAN = "\033[96m"
    GRAY = "\033[90m"
    RESET = "\033[0m"
    BOLD = "\033[1m"


class ColoredFormatter(logging.Formatter):
    """Formatter that colors level names and appends solver diagnostics."""

    LEVEL_COLORS = {
        logging.DEBUG: Colors.GRAY,
        logging.INFO: Colors.CYAN,
        logging.WARNING: Colors.YELLOW,
        logging.ERROR: Colors.RED,
        logging.CRITICAL: Colors.RED + Colors.BOLD,
    }

    def __init__(self, fmt: str = LOG_FORMAT, use_colors: bool | None = None):
        super().__init__(fmt)
        self._use_colors = sys.stderr.isatty() if use_colors is None else use_colors

    def format(self, record: logging.LogRecord) -> str:
        original = record.levelname
        if self._use_colors:
            color = self.LEVEL_COLORS.get(record.levelno, "")
            record.levelname = f"{color}{original}{Colors.RESET}"
        try:
            text = super().format(record)
        finally:
            record.levelname = original

        diagnostics = getattr(record, "diagnostics", None)
        if diagnostics:
            pairs = " ".join(f"{k}={_summarize(v, 24)}" for k, v in diagnostics.items())
            text = f"{text} | {pairs}"
        return text


def _level_from_env() -> int:
    name = os.environ.get(LOG_LEVEL_ENV, "INFO").upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


def setup_logging(level: int | None = None) -> None:
    """Install the stderr handler on the root logger.

    The level comes from ``level`` or else from LNAMOR_LOG_LEVEL (INFO when
    unset or unknown). Calling it again replaces the handler it installed
    earlier and leaves other handlers alone.
    """
    level = _level_from_env() if level is None else level

    handler = logging.StreamHandler(sys.stderr)
    handler.name = _HANDLER_NAME
    handler.setLevel(level)
    handler.setFormatter(ColoredFormatter())

    root = logging.getLogger()
    root.handlers = [h for h in root.handlers if h.name != _HANDLER_NAME]
    root.addHandler(handler)
    root.setLevel(level)
    logging.getLogger(__name__).debug(
        f"Logging initialized at {logging.getLevelName(level)}"
    )


def set_level(level: int) -> None:
    """Override the level chosen by setup_logging (used by --verbose)."""
    root = logging.getLogger()
    root.setLevel(level)
    for handler in root.handlers:
        if handler.name == _HANDLER_NAME:
            handler.setLevel(level)


def _summarize(value: Any, max_length: int = 100) -> str:
    """Short rendering for log lines: arrays by shape, long text cut."""
    if isinstance(value, np.ndarray):
        return f"ndarray(shape={value.shape})"
    text = str(value)
    if len(text) > max_length:
        return text[:max_length] + "..."
    return text


def log_calls(func: F) -> F:
    """Log entry, exit and elapsed time of ``func`` at DEBUG.

    Exceptions are logged at ERROR with their type and message and then
    re-raised unchanged. Matrices in arguments and results are rendered by
    shape only.

    Usage:
        @log_calls
        def structured_gramians(r, pattern):
            ...
    """

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        logger = logging.getLogger(func.__module__)
        name = func.__qualname__
        if logger.isEnabledFor(logging.DEBUG):
            rendered = [_summarize(a) for a in args]
            rendered += [f"{k}={_summarize(v)}" for k, v in kwargs.items()]
            logger.debug(f"→ {name}({', '.join(rendered)})")

        start = perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            elapsed = (perf_counter() - start) * 1000
            logger.error(f"✗ {name} raised {type(e).__name__}: {e} ({elapsed:.2f}ms)")
            raise

        if logger.isEnabledFor(logging.DEBUG):
            elapsed = (perf_counter() - start) * 1000
            logger.debug(f"← {name} returned {_summarize(result)} ({elapsed:.2f}ms)")
        return result

    return cast(F, wrapper)
