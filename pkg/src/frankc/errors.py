"""Exception hierarchy shared by every stage of the toolchain."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


class FrankError(Exception):
    """Base class. ``kind`` is the stable, machine-readable error name."""

    kind = "FrankError"
    static = True

    def __init__(self, message: str, span: Span | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def diagnostic(self, filename: str = "<input>") -> str:
        where = f"{filename}:{self.span}" if self.span else f"{filename}:0:0"
        return f"{where}: error: {self.kind}: {self.message}"


class LexError(FrankError):
    kind = "LexError"


class ParseError(FrankError):
    kind = "ParseError"

    def __init__(self, message, span=None, expected=()):
        super().__init__(message, span)
        self.expected = frozenset(expected)


class DesugarError(FrankError):
    kind = "DesugarError"


class DeclarationError(FrankError):
    kind = "DeclarationError"


class FrankTypeError(FrankError):
    kind = "TypeError"


class UnboundVariable(FrankTypeError):
    kind = "UnboundVariable"


class NotAThunk(FrankTypeError):
    kind = "NotAThunk"


class AbilityMismatch(FrankTypeError):
    kind = "AbilityMismatch"


class ArityMismatch(FrankTypeError):
    kind = "ArityMismatch"


class ConstructorMismatch(FrankTypeError):
    kind = "ConstructorMismatch"


class NotASuspension(FrankTypeError):
    kind = "NotASuspension"


class CommandNotInAdjustment(FrankTypeError):
    kind = "CommandNotInAdjustment"


class DuplicatePatternVariable(FrankTypeError):
    kind = "DuplicatePatternVariable"


class UnificationError(FrankTypeError):
    kind = "UnificationError"


class OccursError(UnificationError):
    kind = "OccursError"


class AmbiguousAbility(FrankTypeError):
    kind = "AmbiguousAbility"


class AmbiguousInstantiation(FrankTypeError):
    kind = "AmbiguousInstantiation"


class CoverageError(FrankTypeError):
    kind = "CoverageError"

    def __init__(self, message, span=None, witness=()):
        super().__init__(message, span)
        self.witness = tuple(witness)


class NotFound(FrankTypeError):
    """Command lookup failure in an ability."""

    kind = "NotFound"


class CoreTypeError(FrankTypeError):
    kind = "CoreTypeError"


class InternalError(FrankError):
    kind = "InternalError"


class RuntimeFailure(FrankError):
    static = False
    kind = "RuntimeError"


class Stuck(RuntimeFailure):
    kind = "Stuck"


class FuelExhausted(RuntimeFailure):
    kind = "FuelExhausted"

    def __init__(self, message, term=None, steps=0):
        super().__init__(message)
        self.term = term
        self.steps = steps


class ArithmeticOverflow(RuntimeFailure):
    kind = "ArithmeticOverflow"


class EmptyScriptedInput(RuntimeFailure):
    kind = "EmptyScriptedInput"
