"""Exception hierarchy shared by every stage of the pipeline."""


class EquilibError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EquilibError, ArithmeticError):
    """An expression was evaluated outside the domain of one of its operators."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class ParseError(EquilibError):
    """Malformed model, empinfo, options or expected-solution text."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class UnknownSymbol(ParseError):
    pass


class IndexOutOfRange(ParseError):
    pass


class DuplicateName(ParseError):
    pass


class PairSizeMismatch(ParseError):
    pass


class MixedTopLevel(ParseError):
    pass


class ValidationError(EquilibError):
    """The empinfo annotations violate an ownership rule."""


class MultipleOwnership(ValidationError):
    pass


class NonImplicitSharedVariable(MultipleOwnership):
    """A variable listed by several agents that was not declared implicit."""


class MissingOwnership(ValidationError):
    pass


class SharedEquNotEnabled(ValidationError):
    pass


class NoObjectiveDefiningEquation(ValidationError):
    pass


class ImplicitNotSquare(ValidationError):
    pass


class NonFreeImplicit(ValidationError):
    pass


class InvalidRelation(ValidationError):
    """An ``=N=`` row used as a constraint, or a non-equality defining row."""


class AssemblyError(EquilibError):
    pass


class AmbiguousReplication(AssemblyError):
    pass


# Same condition detected at assembly time rather than at validation.
NonSquareImplicit = ImplicitNotSquare


class UnmatchedParameterVariable(AssemblyError):
    pass


class MismatchedExpectation(EquilibError):
    def __init__(self, failures):
        super().__init__("; ".join(failures))
        self.failures = list(failures)
