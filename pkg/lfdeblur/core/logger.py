import logging
import sys
from typing import Union

from lfdeblur.core.config import LOG_LEVEL
from lfdeblur.core.exceptions import ConfigError

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"

# Package root logger; the handler goes here so importing lfdeblur leaves the root logger alone
logger = logging.getLogger("lfdeblur")
if not logger.handlers:
    _handler = logging.StreamHandler(sys.stdout)
    _handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=LOG_DATEFMT))
    logger.addHandler(_handler)
logger.setLevel(getattr(logging, LOG_LEVEL))


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger with the specified name.

    Args:
        name: The name for the logger, typically __name__ from the calling module

    Returns:
        A configured logger instance under the "lfdeblur" namespace
    """
    if name.startswith("lfdeblur."):
        name = name[len("lfdeblur."):]
    return logging.getLogger(f"lfdeblur.{name}")


def set_log_level(level: Union[str, int]) -> None:
    """
    Set the level of every toolkit logger (the CLI --log-level flag).

    Raises:
        ConfigError: If a level name is not one logging knows
    """
    if isinstance(level, str):
        resolved = logging.getLevelName(level.upper())
        if not isinstance(resolved, int):
            raise ConfigError(f"unknown log level '{level}'")
        level = resolved
    logger.setLevel(level)
