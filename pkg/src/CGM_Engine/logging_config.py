"""
Logging configuration for the conformal Gauss map lab.

This module sets up application-wide logging with both file and console output.
Library modules only ask for a named logger; the CLI entry point calls
setup_logging() once before running a command.
"""

import logging
import os
from datetime import datetime
from logging.handlers import RotatingFileHandler


# Logs are stored in <repo>/logs unless CGM_LOG_DIR points elsewhere.
# This assumes the structure: <repo>/src/CGM_Engine/logging_config.py
BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
DEFAULT_LOGS_DIR = os.path.join(BASE_DIR, "logs")

APP_LOG_NAME = "lab.log"
ERROR_LOG_NAME = "errors.log"

# Log format - includes timestamp, logger name, level, and message
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

MAX_LOG_BYTES = 10 * 1024 * 1024  # 10 MB
BACKUP_COUNT = 5


def resolve_logs_dir(log_dir=None):
    """Return the directory for log files, creating it when missing."""
    logs_dir = log_dir or os.environ.get("CGM_LOG_DIR") or DEFAULT_LOGS_DIR
    if not os.path.exists(logs_dir):
        os.makedirs(logs_dir)
    return logs_dir


def setup_logging(log_level=logging.INFO, log_dir=None, run_name="Conformal Gauss Lab"):
    """
    Set up application-wide logging configuration.

    This creates handlers for:
    - Console output (INFO and above)
    - General application log file (log_level and above)
    - Error log file (ERROR and above)

    Args:
        log_level: Minimum level to log (default: logging.INFO)
        log_dir: Directory for the rotating log files (default: CGM_LOG_DIR or <repo>/logs)
        run_name: Label written in the startup banner

    Returns:
        The directory the log files are written to
    """
    logs_dir = resolve_logs_dir(log_dir)
    formatter = logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT)

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(formatter)

    # Rotating file handler - max 10MB per file, keep 5 backup files
    app_file_handler = RotatingFileHandler(
        os.path.join(logs_dir, APP_LOG_NAME),
        maxBytes=MAX_LOG_BYTES,
        backupCount=BACKUP_COUNT,
        encoding="utf-8",
    )
    app_file_handler.setLevel(log_level)
    app_file_handler.setFormatter(formatter)

    error_file_handler = RotatingFileHandler(
        os.path.join(logs_dir, ERROR_LOG_NAME),
        maxBytes=MAX_LOG_BYTES,
        backupCount=BACKUP_COUNT,
        encoding="utf-8",
    )
    error_file_handler.setLevel(logging.ERROR)
    error_file_handler.setFormatter(formatter)

    root_logger = logging.getLogger()
    root_logger.setLevel(log_level)

    # Remove existing handlers to avoid duplicates on repeated CLI calls
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        handler.close()

    root_logger.addHandler(console_handler)
    root_logger.addHandler(app_file_handler)
    root_logger.addHandler(error_file_handler)

    # numba logs its compilation pipeline at DEBUG
    logging.getLogger("numba").setLevel(logging.WARNING)

    root_logger.info("=" * 80)
    root_logger.info(f"{run_name} Started - {datetime.now().strftime(DATE_FORMAT)}")
    root_logger.info(f"Log Level: {logging.getLevelName(log_level)}")
    root_logger.info(f"Logs Directory: {logs_dir}")
    root_logger.info("=" * 80)
    return logs_dir


def level_from_name(name, default=logging.INFO):
    """Map a level name such as "DEBUG" to its logging constant."""
    if not name:
        return default
    level = logging.getLevelName(str(name).upper())
    return level if isinstance(level, int) else default


def get_logger(name):
    """
    Get a logger for a specific module.

    Args:
        name: Name for the logger (typically __name__ of the module)

    Returns:
        Logger instance

    Example:
        >>> logger = get_logger(__name__)
        >>> logger.info("Integrated 3 functionals over 2 charts")
        >>> logger.error("Node evaluation failed")
    """
    return logging.getLogger(name)


# Usage examples (for documentation):
"""
USAGE EXAMPLES:

1. In any module, import and use the logger:

    from CGM_Engine.logging_config import get_logger

    logger = get_logger(__name__)

    logger.debug("Chunk 3/12 of chart 'north' evaluated")
    logger.info("Energy suite finished")
    logger.warning("Sign of det(A_ring) is not constant")
    logger.error("Report could not be written")

2. Log exceptions with full traceback (orchestrator only):

    try:
        lab.run(config)
    except GeometryError as e:
        logger.error(f"Run failed: {e}", exc_info=True)

LOG LEVELS (when to use each):

- DEBUG: per-chunk and per-chart progress, quadrature node counts
- INFO: suite start/finish, functional values, report paths
- WARNING: tolerance failures, skipped suites
- ERROR: failed runs (validation, I/O)
"""
