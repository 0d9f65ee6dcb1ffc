"""Exception hierarchy.

``UsageError`` and ``ParseError`` map to CLI exit code 1, every
``MathError`` to exit code 2.
"""
from __future__ import annotations


class QuartopError(Exception):
    """Base class for all package errors."""


class UsageError(QuartopError):
    pass


class ParseError(QuartopError):
    def __init__(self, message: str, offset: int, expected: str | None = None, text: str = ""):
        self.message = message
        self.offset = offset
        self.expected = expected
        self.text = text
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at offset {offset}{hint}")


class UnknownIdentifier(ParseError):
    pass


class MathError(QuartopError, ArithmeticError):
    """A mathematical failure: singularity, pole, degenerate configuration."""


class ZeroDivisor(MathError, ZeroDivisionError):
    pass


class DomainError(MathError, ValueError):
    pass


class BasePointMismatch(MathError, ValueError):
    pass


class InsufficientOrder(MathError, ValueError):
    pass


class SingularLinearPart(MathError):
    pass


class SingularLinearMap(MathError):
    pass


class SingularJacobian(MathError):
    pass


class PoleAtI2Zero(MathError):
    pass


class ZeroQuartic(MathError):
    pass


class SingularSystem(MathError):
    pass


class NotRegular(SingularSystem):
    """The principal symbol has a (numerically) vanishing discriminant."""


class NonUnitPivot(MathError):
    pass


class NotConstantType(MathError):
    pass


class SingularTresseFrame(MathError):
    pass


class ZeroTorsion(MathError):
    pass


class DegenerateMetric(MathError):
    pass


class DegenerateCoframe(MathError):
    pass


class AllPointsSingular(MathError):
    pass
