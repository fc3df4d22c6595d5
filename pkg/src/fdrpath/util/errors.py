import logging
import os
import traceback
from dataclasses import dataclass
from typing import List, Optional, Tuple

logger = logging.getLogger(__name__)


@dataclass
class ReplicateFailure:
    """
    A replicate which could not be completed.

    Parameters
    ----------
    setting : str
        Name of the scenario setting.
    replicate : int
        Replicate index.
    message : str
        Error message.
    filename : str
        Name of the file in which the error was raised.
    lineno : int
        Line number at which the error was raised.
    stack_trace : str, optional
        Formatted stack trace.

    """

    setting: str
    replicate: int
    message: str
    filename: str
    lineno: int
    stack_trace: Optional[str] = None

    def __str__(self) -> str:
        return (
            f"[{self.filename}, line {self.lineno}] {self.message} "
            f"[{self.setting}, replicate {self.replicate}]"
        )


def error_location(e: BaseException) -> Tuple[str, int]:
    """
    Get the name of the file and the line number where an exception was raised.

    Parameters
    ----------
    e : BaseException
        Exception.

    Returns
    -------
    tuple
        A tuple of the file name and line number.

    """

    stack_frames = traceback.extract_tb(e.__traceback__)
    if len(stack_frames) > 0:
        filename = os.path.basename(stack_frames[-1].filename)
        lineno = stack_frames[-1].lineno
        return filename, lineno or 0
    else:
        return "?", 0


def replicate_failure(e: BaseException, setting: str, replicate: int) -> ReplicateFailure:
    """Describe the exception raised by a replicate."""

    filename, lineno = error_location(e)
    return ReplicateFailure(
        setting=setting,
        replicate=replicate,
        message=str(e) or type(e).__name__,
        filename=filename,
        lineno=lineno,
        stack_trace="".join(traceback.format_exception(type(e), e, e.__traceback__)),
    )


def log_failure(failure: ReplicateFailure, verbosity_level: int) -> None:
    """
    Log a replicate failure.

    Nothing is logged for verbosity level 0, and the stack trace is included for
    level 3.

    """

    if verbosity_level == 0:
        return
    msg = str(failure)
    if verbosity_level == 3 and failure.stack_trace:
        msg += f"""

Stack trace
-----------
{failure.stack_trace}"""
    logger.error(msg)


def failure_report(
    failures: List[ReplicateFailure], warnings: List[str], verbosity_level: int
) -> str:
    """
    The end-of-run report of errors and warnings.

    Parameters
    ----------
    failures : list of ReplicateFailure
        Failed replicates.
    warnings : list of str
        Warning messages.
    verbosity_level : int
        Verbosity level; the individual messages are listed from level 2.

    Returns
    -------
    str
        The report.

    """

    msg = ""
    if verbosity_level >= 2:
        msg += "ERRORS:\n"
        msg += "-------\n"
        if failures:
            for failure in failures:
                msg += f"{failure}\n"
        else:
            msg += "There are no errors.\n"
        msg += "\n"
        msg += "WARNINGS:\n"
        msg += "---------\n"
        if warnings:
            for warning in warnings:
                msg += f"{warning}\n"
        else:
            msg += "There are no warnings.\n"

    msg += f"""
Total number of errors: {len(failures)}
Total number of warnings: {len(warnings)}
"""
    return msg
