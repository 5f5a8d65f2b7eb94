"""Exception hierarchy. Every error raised on purpose derives from PhiConvexError."""

from __future__ import annotations


class PhiConvexError(Exception):
    pass


class ExprError(PhiConvexError, ValueError):
    """Problem with an expression's text; carries the character offset."""

    def __init__(self, message: str, position: int, source: str = ""):
        self.message = message
        self.position = position
        self.source = source
        super().__init__(f"{message} (at offset {position})")


class ExprSyntaxError(ExprError):
    pass


class UnknownNameError(ExprError):
    pass


class ArityError(ExprError):
    pass


class EvaluationError(PhiConvexError, ArithmeticError):
    """Missing binding or a domain fault (log/sqrt/division/power)."""

    def __init__(self, message: str, subexpression: str = ""):
        self.subexpression = subexpression
        super().__init__(message)


class DomainError(PhiConvexError, ValueError):
    """Invalid region, dimension mismatch, or a phi image outside the domain."""


class DegenerateSegmentError(PhiConvexError, ValueError):
    pass


class NegativityError(PhiConvexError, ValueError):
    pass


class QuadratureError(PhiConvexError, RuntimeError):
    def __init__(self, message: str, estimate: float, error_estimate: float, subdivisions: int):
        self.estimate = estimate
        self.error_estimate = error_estimate
        self.subdivisions = subdivisions
        super().__init__(message)


class ConfigError(PhiConvexError, ValueError):
    pass
