"""Exception hierarchy. Every error can carry a JSON pointer into the input file."""

from __future__ import annotations


class TwographError(Exception):
    """Base class; ``pointer`` locates the offending JSON node when known."""

    def __init__(self, message: str, pointer: str | None = None):
        self.pointer = pointer
        if pointer is not None:
            message = f"{message} (at {pointer})"
        super().__init__(message)


class InputError(TwographError):
    """Malformed or ill-typed input. CLI exit code 2."""


class ParseError(InputError):
    def __init__(self, message: str, pointer: str | None = None, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message, pointer)


class ArityMismatch(InputError):
    pass


class NonInjectiveSources(InputError):
    pass


class DanglingId(InputError):
    pass


class SortMismatch(InputError):
    pass


class UnknownSymbol(InputError):
    pass


class NotStratified(InputError):
    pass


class NotNormalized(InputError):
    pass


class NotRegular(InputError):
    pass


class WrongClass(InputError):
    pass


class ClassMismatch(InputError):
    pass


class VariantMismatch(InputError):
    pass


class UnknownVerb(InputError):
    pass


class DecompositionError(TwographError):
    """The graph does not belong to the domain of a decomposition."""


class NotATree(DecompositionError):
    pass


class NotSeriesParallel(DecompositionError):
    pass


class NotDisorientedSeriesParallel(DecompositionError):
    pass


class Disconnected(DecompositionError):
    pass


class NotTreewidth2(DecompositionError):
    pass


class NotInClassDomain(DecompositionError):
    pass


class LimitError(TwographError):
    """A configured resource cap was hit. CLI exit code 3."""


class BudgetExceeded(LimitError):
    def __init__(self, message: str, partial: int | None = None):
        self.partial = partial
        if partial is not None:
            message = f"{message} (partial count {partial})"
        super().__init__(message)


class BoundExceeded(LimitError):
    pass


class SizeLimitExceeded(LimitError):
    pass


class InclusionInconclusive(LimitError):
    """Every counterexample candidate within the oracle bound was refuted by direct membership."""
