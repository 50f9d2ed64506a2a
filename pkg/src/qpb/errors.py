"""Exception types shared across the package."""


class QpbError(Exception):
    """Base class for all errors raised by qpb."""


class ScalarParseError(QpbError, ValueError):
    pass


class NotASquare(QpbError, ValueError):
    """A scalar has no exact square root in Q(q^(1/2))."""


class PresentationError(QpbError, ValueError):
    """Malformed presentation or JSON input; carries an optional location."""

    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = ""
        if line is not None:
            where = f"line {line}, column {column}: "
        super().__init__(where + message)


class CompletionOverflow(QpbError):
    def __init__(self, message, overlap=None):
        super().__init__(message)
        self.overlap = overlap


class ZeroLeadingTerm(QpbError):
    """The presented ideal contains a nonzero scalar."""


class DegreeOverflow(QpbError):
    pass


class Inconsistent(QpbError):
    """A linear system has no solution."""


class UnknownGroup(QpbError, KeyError):
    pass


class NonUniqueHaar(QpbError):
    pass


class NoIntertwiner(QpbError):
    pass


class NonScalarAmbiguity(QpbError):
    pass


class NoMultiplet(QpbError):
    pass


class NormalizationImpossible(QpbError):
    pass


class NotEquivariant(QpbError):
    pass


class NotIsometric(QpbError):
    pass


class BalanceNonConfluent(QpbError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class EnvelopeTooShallow(QpbError):
    pass


class NotAConnection(QpbError):
    pass
