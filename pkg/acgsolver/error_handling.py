"""
Error handling for the ACG solver toolkit
Provides categorized exceptions, classification of foreign exceptions and
an error handler that logs, keeps a history and maps errors to exit codes
"""

import logging
import time
import traceback
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Optional


class ErrorCategory(Enum):
    """Categories of errors that can occur while solving or generating"""
    INPUT = "input"
    PARSE = "parse"
    NUMERICAL = "numerical"
    GENERATION = "generation"
    LIMIT = "limit"
    INTERNAL = "internal"


class AcgError(Exception):
    """Base class of every error raised by acgsolver"""
    category = ErrorCategory.INTERNAL


# Graph

class GraphError(AcgError):
    category = ErrorCategory.INPUT


class NegativeCost(GraphError):
    """An arc cost or resource value is negative"""


class BadEndpoint(GraphError):
    """An arc endpoint, the source or the target is not a valid node"""


class ResourceArityMismatch(GraphError):
    """An arc does not carry exactly resource_count resource values"""


# LP

class LpModelError(AcgError):
    category = ErrorCategory.INPUT


class UnknownColumn(LpModelError):
    pass


class NumericalFailure(AcgError):
    category = ErrorCategory.NUMERICAL


# Constraints

class InvalidConstraint(AcgError):
    category = ErrorCategory.INPUT


# Master / branching

class EmptyAtomicSet(AcgError):
    category = ErrorCategory.INPUT


class ArcNotEligible(AcgError):
    category = ErrorCategory.INPUT


# Instances

class ParseError(AcgError):
    """Malformed instance or solution file"""
    category = ErrorCategory.PARSE

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        context = []
        if line is not None:
            context.append(f"line {line}")
        if field:
            context.append(field)
        super().__init__(f"{': '.join(context)}: {message}" if context else message)


class GenerationError(AcgError):
    category = ErrorCategory.GENERATION


class WalkTooShort(GenerationError):
    pass


class BaseInfeasible(GenerationError):
    pass


# Oracle

class TooLarge(AcgError):
    category = ErrorCategory.LIMIT


class CyclicGraph(AcgError):
    category = ErrorCategory.INPUT


# Configuration and command line

class ConfigError(AcgError):
    category = ErrorCategory.INPUT


class UsageError(AcgError):
    category = ErrorCategory.INPUT


EXIT_CODES = {
    ErrorCategory.INPUT: 64,
    ErrorCategory.PARSE: 65,
}
EXIT_INTERNAL = 70


@dataclass
class SolverError:
    """Structured error information"""
    category: ErrorCategory
    message: str
    original_exception: Optional[Exception] = None
    context: Optional[str] = None
    timestamp: float = 0.0

    def __post_init__(self):
        if self.timestamp == 0.0:
            self.timestamp = time.time()


class ErrorClassifier:
    """Classifies exceptions into error categories"""

    @classmethod
    def classify_error(cls, exception: Exception) -> ErrorCategory:
        """Classify an exception into an error category"""
        if isinstance(exception, AcgError):
            return exception.category

        if isinstance(exception, (FileNotFoundError, PermissionError, IsADirectoryError)):
            return ErrorCategory.INPUT
        if isinstance(exception, (UnicodeDecodeError,)):
            return ErrorCategory.PARSE
        if isinstance(exception, (ZeroDivisionError, FloatingPointError, OverflowError)):
            return ErrorCategory.NUMERICAL
        if isinstance(exception, (TimeoutError,)):
            return ErrorCategory.LIMIT

        return ErrorCategory.INTERNAL


class ErrorHandler:
    """Logs categorized errors and keeps a history of them"""

    def __init__(self, logger: Optional[logging.Logger] = None):
        self.error_history: List[SolverError] = []
        self.logger = logger or logging.getLogger(__name__)

    def handle_error(self, exception: Exception, context: Optional[str] = None) -> SolverError:
        """Process and classify an error"""
        error = SolverError(
            category=ErrorClassifier.classify_error(exception),
            message=str(exception),
            original_exception=exception,
            context=context,
        )
        self.error_history.append(error)
        self._log_error(error)
        return error

    def _log_error(self, error: SolverError):
        log_message = f"Error ({error.category.value}): {error.message}"
        if error.context:
            log_message += f" [{error.context}]"

        if error.category == ErrorCategory.INTERNAL:
            self.logger.error(log_message)
            if error.original_exception is not None:
                self.logger.debug(
                    "".join(traceback.format_exception(
                        type(error.original_exception),
                        error.original_exception,
                        error.original_exception.__traceback__,
                    ))
                )
        elif error.category in (ErrorCategory.NUMERICAL, ErrorCategory.LIMIT):
            self.logger.warning(log_message)
        else:
            self.logger.error(log_message)

    @staticmethod
    def exit_code(error: SolverError) -> int:
        """Exit code of the command line for a handled error"""
        return EXIT_CODES.get(error.category, EXIT_INTERNAL)

    def get_error_summary(self) -> Dict[str, Any]:
        """Get summary of errors encountered"""
        if not self.error_history:
            return {"total_errors": 0}

        category_counts: Dict[str, int] = {}
        for error in self.error_history:
            category = error.category.value
            category_counts[category] = category_counts.get(category, 0) + 1

        return {
            "total_errors": len(self.error_history),
            "by_category": category_counts,
            "most_recent": self.error_history[-1].message,
        }
