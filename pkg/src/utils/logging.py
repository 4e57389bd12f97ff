"""
Logging utility module for the consolidation pipeline.

Provides JSON-structured logging with run ID propagation, so every record
emitted while a pipeline run is active can be tied back to that run.
"""

import logging
import uuid
from typing import Optional, Dict, Any
from datetime import datetime, timezone
from contextvars import ContextVar

import orjson

# Context variable for run ID propagation
_run_id: ContextVar[Optional[str]] = ContextVar('run_id', default=None)

PACKAGE_LOGGER = "src"

# Attributes every LogRecord has; anything else came in through `extra=`.
_RESERVED_ATTRS = frozenset(vars(logging.LogRecord("", 0, "", 0, "", None, None))) | {"message", "asctime"}


def get_run_id() -> Optional[str]:
    """Get the current run ID from context.

    Returns:
        Current run ID or None if not set
    """
    return _run_id.get()


def set_run_id(run_id: Optional[str] = None) -> str:
    """Set run ID in context.

    Args:
        run_id: Optional run ID. If None, generates a new UUID.

    Returns:
        The run ID that was set
    """
    if run_id is None:
        run_id = str(uuid.uuid4())
    _run_id.set(run_id)
    return run_id


def clear_run_id():
    """Clear the run ID from context."""
    _run_id.set(None)


class JSONFormatter(logging.Formatter):
    """JSON formatter for structured logging."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON.

        Args:
            record: Log record to format

        Returns:
            JSON-formatted log string
        """
        log_data: Dict[str, Any] = {
            'timestamp': datetime.now(timezone.utc).isoformat().replace('+00:00', 'Z'),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
        }

        run_id = get_run_id()
        if run_id:
            log_data['run_id'] = run_id

        if record.exc_info:
            log_data['exception'] = self.formatException(record.exc_info)

        # Fields passed via `extra=` land directly on the record
        for key, value in record.__dict__.items():
            if key not in _RESERVED_ATTRS and not key.startswith('_'):
                log_data[key] = value

        return orjson.dumps(log_data, default=str).decode('utf-8')


def get_logger(name: str, level: Optional[int] = None) -> logging.Logger:
    """Get a logger that inherits the package handler.

    Args:
        name: Logger name (typically __name__)
        level: Optional explicit level for this logger

    Returns:
        Logger instance
    """
    logger = logging.getLogger(name)
    if level is not None:
        logger.setLevel(level)
    return logger


def configure_logging(level: str = "INFO", json_format: bool = True) -> logging.Logger:
    """Install a single stream handler on the package root logger.

    Args:
        level: Level name (DEBUG, INFO, ...)
        json_format: Emit JSON records when True, plain text otherwise

    Returns:
        The package root logger
    """
    root = logging.getLogger(PACKAGE_LOGGER)
    root.setLevel(level.upper())

    # Avoid adding handlers multiple times
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler()
    if json_format:
        handler.setFormatter(JSONFormatter())
    else:
        handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
    root.addHandler(handler)
    root.propagate = False  # Prevent duplicate logs from the root logger
    return root


class RunContext:
    """Context manager for run ID propagation."""

    def __init__(self, run_id: Optional[str] = None):
        """Initialize run context.

        Args:
            run_id: Optional run ID. If None, generates a new UUID.
        """
        self.run_id = run_id
        self._previous_id: Optional[str] = None

    def __enter__(self) -> str:
        self._previous_id = get_run_id()
        return set_run_id(self.run_id)

    def __exit__(self, exc_type, exc_val, exc_tb):
        if self._previous_id is not None:
            set_run_id(self._previous_id)
        else:
            clear_run_id()
