# acgsolver/utils.py
# Utility helpers (deadlines, JSON number formatting, tolerance checks)

import math
import time
from typing import Any, Optional

EPS = 1e-9


class Deadline:
    """Absolute point on the monotonic clock; `None` limit means no deadline"""

    __slots__ = ("at",)

    def __init__(self, at: Optional[float] = None):
        self.at = at

    @classmethod
    def after_ms(cls, ms: Optional[float]) -> "Deadline":
        if ms is None:
            return cls(None)
        return cls(time.monotonic() + ms / 1000.0)

    @classmethod
    def never(cls) -> "Deadline":
        return cls(None)

    def remaining(self) -> float:
        """Seconds left, +inf without a limit"""
        if self.at is None:
            return math.inf
        return max(0.0, self.at - time.monotonic())

    def expired(self) -> bool:
        return self.at is not None and time.monotonic() >= self.at

    def sub(self, ms: Optional[float]) -> "Deadline":
        """Deadline after `ms` milliseconds, capped by this one"""
        if ms is None:
            return Deadline(self.at)
        at = time.monotonic() + ms / 1000.0
        if self.at is not None:
            at = min(at, self.at)
        return Deadline(at)

    def __repr__(self) -> str:
        return f"Deadline(remaining={self.remaining():.3f}s)"


def is_integral(value: float, tol: float = 1e-6) -> bool:
    return abs(value - round(value)) <= tol


def json_number(value: float) -> Any:
    """Integral floats as ints, infinities and NaN as None, others unchanged"""
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return value
    value = float(value)
    if math.isinf(value) or math.isnan(value):
        return None
    if value.is_integer():
        return int(value)
    return value


def elapsed_ms(start: float) -> int:
    return int(round((time.monotonic() - start) * 1000.0))
