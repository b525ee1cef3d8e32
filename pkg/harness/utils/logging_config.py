"""
Logging Configuration Module

Configures the ``harness`` logger hierarchy: a console handler on stderr
(stdout carries the JSON run records of the command-line stages) and, outside
containers, a rotating file under ``logs/``. Every record carries the name of
the pipeline stage being run, so one log file can hold a whole pipeline.

Environment:
    HARNESS_LOG_LEVEL    level name used on import (default INFO)
    HARNESS_LOG_TO_FILE  "false" disables the file handler
    HARNESS_LOG_DIR      directory of the rotating log files (default logs)
"""
import logging
import os
import sys
from datetime import datetime
from logging.handlers import RotatingFileHandler

PACKAGE_LOGGER = "harness"
LOG_DIR = "logs"
NO_STAGE = "-"

_LOG_FORMAT = "%(asctime)s - %(stage)s - %(name)s - %(levelname)s - %(message)s"
_DOCKER_FORMAT = "[%(levelname)s] %(stage)s: %(message)s"


class StageFilter(logging.Filter):
    """Stamps each record with the current pipeline stage."""

    def __init__(self):
        super().__init__()
        self.stage = NO_STAGE

    def filter(self, record):
        record.stage = self.stage
        return True


_stage_filter = StageFilter()


def is_running_in_docker():
    """Check if the harness is running inside a Docker container."""
    return os.path.exists('/.dockerenv') or os.environ.get('DOCKER_CONTAINER') == 'true'


def log_level_from_env(default=logging.INFO):
    """Resolve HARNESS_LOG_LEVEL to a logging level, falling back to ``default``."""
    name = os.environ.get("HARNESS_LOG_LEVEL", "").upper()
    level = logging.getLevelName(name) if name else default
    return level if isinstance(level, int) else default


def file_logging_enabled():
    """File logging is on unless disabled by HARNESS_LOG_TO_FILE or running in a container."""
    return not is_running_in_docker() and os.environ.get("HARNESS_LOG_TO_FILE", "true").lower() == "true"


def set_stage(stage):
    """Tag subsequent log records with ``stage``."""
    _stage_filter.stage = stage or NO_STAGE


def setup_logging(log_level=logging.INFO, log_to_file=True, log_to_console=True):
    """
    Set up logging for the harness package.

    Only the ``harness`` logger is touched, so an application embedding the
    package keeps its own root configuration. Calling this again (the CLI does
    so for ``--log-level``) replaces the handlers installed before.

    Args:
        log_level (int): The logging level to use (default: logging.INFO)
        log_to_file (bool): Whether to log to a rotating file (default: True)
        log_to_console (bool): Whether to log to stderr (default: True)

    Returns:
        logging.Logger: The configured package logger
    """
    package_logger = logging.getLogger(PACKAGE_LOGGER)
    package_logger.setLevel(log_level)
    package_logger.propagate = False

    for handler in package_logger.handlers[:]:
        package_logger.removeHandler(handler)
        handler.close()

    if is_running_in_docker():
        formatter = logging.Formatter(_DOCKER_FORMAT)
    else:
        formatter = logging.Formatter(_LOG_FORMAT, datefmt='%Y-%m-%d %H:%M:%S')

    handlers = []
    if log_to_console:
        handlers.append(logging.StreamHandler(sys.stderr))

    if log_to_file and not is_running_in_docker():
        log_dir = os.environ.get("HARNESS_LOG_DIR", LOG_DIR)
        os.makedirs(log_dir, exist_ok=True)
        log_file = os.path.join(log_dir, f"harness_{datetime.now().strftime('%Y%m%d')}.log")
        # 10MB per file, keep 5 backups
        handlers.append(RotatingFileHandler(log_file, maxBytes=10 * 1024 * 1024, backupCount=5))

    for handler in handlers:
        handler.setFormatter(formatter)
        handler.addFilter(_stage_filter)
        package_logger.addHandler(handler)

    return package_logger


def get_logger(name):
    """
    Get a logger with the specified name.

    Args:
        name (str): The name of the logger, typically __name__ from the calling module

    Returns:
        logging.Logger: A logger instance under the harness hierarchy
    """
    return logging.getLogger(name)
