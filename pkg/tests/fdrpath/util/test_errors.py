import logging

from fdrpath.util.errors import (
    ReplicateFailure,
    error_location,
    failure_report,
    log_failure,
    replicate_failure,
)


def _failure(message="EM failed", stack_trace=None):
    return ReplicateFailure(
        setting="m-200",
        replicate=4,
        message=message,
        filename="peb.py",
        lineno=42,
        stack_trace=stack_trace,
    )


def _raise(e):
    raise e


def test_replicate_failure_string():
    assert str(_failure()) == "[peb.py, line 42] EM failed [m-200, replicate 4]"


def test_error_location_of_a_raised_exception():
    try:
        _raise(ValueError("boom"))
    except ValueError as e:
        filename, lineno = error_location(e)

    assert filename == "test_errors.py"
    assert lineno > 0


def test_error_location_without_traceback():
    assert error_location(ValueError("never raised")) == ("?", 0)


def test_replicate_failure_of_an_exception():
    try:
        _raise(ValueError("boom"))
    except ValueError as e:
        failure = replicate_failure(e, "default", 1)

    assert failure.message == "boom"
    assert failure.setting == "default" and failure.replicate == 1
    assert failure.stack_trace is not None and "ValueError: boom" in failure.stack_trace


def test_replicate_failure_without_message_uses_the_type_name():
    try:
        _raise(KeyError())
    except KeyError as e:
        failure = replicate_failure(e, "default", 0)

    assert failure.message == "KeyError"


# log_failure


def test_nothing_is_logged_for_verbosity_0(caplog):
    with caplog.at_level(logging.ERROR):
        log_failure(_failure(), 0)

    assert caplog.records == []


def test_failures_are_logged_as_errors(caplog):
    with caplog.at_level(logging.ERROR):
        log_failure(_failure(stack_trace="Traceback ..."), 1)

    assert len(caplog.records) == 1
    assert caplog.records[0].levelno == logging.ERROR
    assert "EM failed" in caplog.text
    assert "Stack trace" not in caplog.text


def test_stack_trace_is_logged_for_verbosity_3(caplog):
    with caplog.at_level(logging.ERROR):
        log_failure(_failure(stack_trace="Traceback ..."), 3)

    assert "Stack trace" in caplog.text
    assert "Traceback ..." in caplog.text


# failure_report


def test_failure_report_without_errors_and_warnings():
    report = failure_report([], [], 2)

    assert "There are no errors." in report
    assert "There are no warnings." in report
    assert "Total number of errors: 0" in report
    assert "Total number of warnings: 0" in report


def test_failure_report_lists_errors_and_warnings():
    report = failure_report([_failure()], ["[default] EM did not converge"], 2)

    assert "ERRORS:" in report
    assert str(_failure()) in report
    assert "WARNINGS:" in report
    assert "EM did not converge" in report
    assert "Total number of errors: 1" in report
    assert "Total number of warnings: 1" in report


def test_failure_report_for_low_verbosity_has_totals_only():
    report = failure_report([_failure()], ["a warning"], 1)

    assert "ERRORS:" not in report
    assert str(_failure()) not in report
    assert "Total number of errors: 1" in report
