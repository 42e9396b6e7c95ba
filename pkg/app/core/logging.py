"""Logging configuration."""

import json
import logging
import sys
from datetime import datetime, timezone

import numpy as np

_RESERVED_FIELDS = {
    "name", "msg", "args", "created", "filename", "funcName",
    "levelname", "levelno", "lineno", "module", "msecs",
    "message", "pathname", "process", "processName", "relativeCreated",
    "thread", "threadName", "exc_info", "exc_text", "stack_info", "taskName",
}


def _jsonable(value: object) -> object:
    """Convert numpy scalars and arrays found in ``extra`` into JSON types."""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (tuple, set)):
        return [_jsonable(v) for v in value]
    return value


class StructuredFormatter(logging.Formatter):
    """Formatter that writes one JSON object per log record."""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as a JSON line.

        Args:
            record: Log record to format.

        Returns:
            JSON formatted log string.
        """
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "message": record.getMessage(),
            "module": f"{record.module}.{record.funcName}",
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        for key, value in record.__dict__.items():
            if key not in _RESERVED_FIELDS and not key.startswith("_"):
                log_data[key] = _jsonable(value)

        return json.dumps(log_data, ensure_ascii=False, default=str)


def setup_logging(level: str = "INFO") -> logging.Logger:
    """Set up structured logging for the toolkit.

    Calling it again only adjusts the level; handlers are installed once.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL).

    Returns:
        Configured logger instance.
    """
    logger = logging.getLogger("app")
    numeric_level = getattr(logging, level.upper(), logging.INFO)
    logger.setLevel(numeric_level)

    if logger.handlers:
        for handler in logger.handlers:
            handler.setLevel(numeric_level)
        return logger

    # stderr keeps stdout free for the CLI status line
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(numeric_level)
    console_handler.setFormatter(StructuredFormatter())
    logger.addHandler(console_handler)
    logger.propagate = False

    return logger


logger = setup_logging()
