"""Shared error types.

Every domain failure raised by the library derives from QlamError so the
command line layer can map them uniformly onto exit code 1.
"""


class QlamError(Exception):
    """Base class for all domain errors."""


class StructuralError(QlamError):
    """Malformed input value (non-square matrix, bad JSON shape, ...)."""


class PreconditionError(QlamError):
    """An operation was called outside its stated precondition."""


class SortError(QlamError):
    """Sorting discipline violated (bad application, bottom at arrow, ...)."""


class ParseError(QlamError):
    """Syntax error; carries the byte offset of the offending token."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class OutOfFuelError(QlamError):
    """Reduction exceeded its step budget."""


class BudgetError(QlamError):
    """A size budget (carrier, witness, structure) would be exceeded."""


class InterpretationError(QlamError):
    """A term could not be interpreted in a finite algebra."""
