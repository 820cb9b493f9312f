import logging

import pytest

from acgsolver.error_handling import (
    BadEndpoint,
    ErrorCategory,
    ErrorClassifier,
    ErrorHandler,
    NumericalFailure,
    ParseError,
    TooLarge,
)


@pytest.mark.parametrize("exc, category", [
    (BadEndpoint("x"), ErrorCategory.INPUT),
    (ParseError("x"), ErrorCategory.PARSE),
    (NumericalFailure("x"), ErrorCategory.NUMERICAL),
    (TooLarge("x"), ErrorCategory.LIMIT),
    (FileNotFoundError("x"), ErrorCategory.INPUT),
    (KeyError("x"), ErrorCategory.INTERNAL),
])
def test_classification(exc, category):
    assert ErrorClassifier.classify_error(exc) == category


def test_parse_error_context():
    err = ParseError("missing field", line=3, field="arcs[0].tail")
    assert str(err) == "line 3: arcs[0].tail: missing field"
    assert (err.line, err.field) == (3, "arcs[0].tail")


def test_exit_codes():
    handler = ErrorHandler(logging.getLogger("test"))
    assert handler.exit_code(handler.handle_error(BadEndpoint("x"))) == 64
    assert handler.exit_code(handler.handle_error(ParseError("x"))) == 65
    assert handler.exit_code(handler.handle_error(RuntimeError("x"))) == 70
    summary = handler.get_error_summary()
    assert summary["total_errors"] == 3
    assert summary["by_category"] == {"input": 1, "parse": 1, "internal": 1}
