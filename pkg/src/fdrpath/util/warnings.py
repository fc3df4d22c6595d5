from typing import List, NamedTuple, Optional


class RecordedWarning(NamedTuple):
    """
    A non-fatal condition noticed while running a procedure.

    Parameters
    ----------
    warning : Warning
        The warning.
    source : str
        Name of the procedure which raised it, such as "em_fit".
    replicate : int, optional
        Replicate index, if the warning was raised within a scenario replicate.

    """

    warning: Warning
    source: str
    replicate: Optional[int]

    def __str__(self) -> str:
        where = f"replicate {self.replicate}, " if self.replicate is not None else ""
        return f"[{where}{self.source}] {self.warning}"


_warnings: List[RecordedWarning] = []
_replicate: Optional[int] = None


def set_replicate(replicate: Optional[int]) -> None:
    """
    Set the replicate index attached to subsequently recorded warnings.

    Parameters
    ----------
    replicate : int, optional
        Replicate index, or None outside a scenario replicate.

    """

    global _replicate
    _replicate = replicate


def record_warning(warning: Warning, source: str = "fdrpath") -> None:
    """
    Record a warning.

    Parameters
    ----------
    warning : Warning
        Warning to record.
    source : str
        Name of the procedure recording the warning.

    """

    _warnings.append(RecordedWarning(warning=warning, source=source, replicate=_replicate))


def get_warnings() -> List[RecordedWarning]:
    """
    Get the recorded warnings.

    Returns
    -------
    List[RecordedWarning]
        Recorded warnings, in the order in which they were recorded.

    """

    return list(_warnings)


def clear_warnings() -> None:
    """
    Clear the recorded warnings.

    """

    _warnings.clear()
