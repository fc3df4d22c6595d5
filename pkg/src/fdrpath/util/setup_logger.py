import logging
from pathlib import Path
from typing import Union

LOG_FORMAT = "%(asctime)s [%(levelname)s]: %(message)s"

LOG_DATE_FORMAT = "%Y/%m/%d %H:%M:%S"


def default_formatter() -> logging.Formatter:
    """The formatter used for console and run log output."""

    return logging.Formatter(fmt=LOG_FORMAT, datefmt=LOG_DATE_FORMAT)


def setup_logger(
    name: str,
    log_file: Union[str, Path],
    formatter: logging.Formatter,
    level: int = logging.INFO,
) -> logging.Logger:
    """
    Attach a file handler to a logger.

    Calling the function again for the same logger and file does not add a second
    handler.

    Parameters
    __________
    name: str
        Name of a logger.
    log_file: str or Path
        Name of a log file.
    formatter: logging.Formatter
        The format of the log file.
    level: int
        The logging level.

    Returns
    -------
    logging.Logger
        The configured logger.

    """

    log_file = Path(log_file).resolve()
    logger = logging.getLogger(name)
    logger.setLevel(level)
    for existing in logger.handlers:
        if (
            isinstance(existing, logging.FileHandler)
            and Path(existing.baseFilename) == log_file
        ):
            return logger

    handler = logging.FileHandler(log_file)
    handler.setFormatter(formatter)
    logger.addHandler(handler)

    return logger


def remove_file_handlers(name: str) -> None:
    """
    Close and remove all file handlers of a logger.

    Parameters
    ----------
    name : str
        Name of the logger.

    """

    logger = logging.getLogger(name)
    for handler in list(logger.handlers):
        if isinstance(handler, logging.FileHandler):
            handler.close()
            logger.removeHandler(handler)
