"""Error types shared by the negotiation toolkit."""

from __future__ import annotations

from typing import Any


class NegotiationError(ValueError):
    """Base class for every error raised by the toolkit."""


class ParseError(NegotiationError):
    """The input text violates the grammar."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SemanticError(NegotiationError):
    """A reference cannot be resolved or an identifier is declared twice."""

    def __init__(self, message: str, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
        self.line = line


class ValidationError(NegotiationError):
    """A structurally sound model violates a model invariant."""

    def __init__(self, report: Any):
        super().__init__(f"invalid negotiation:\n{report}")
        self.report = report


class PreconditionError(NegotiationError):
    """An operation was called outside its precondition."""

    def __init__(self, message: str, report: Any = None):
        super().__init__(message)
        self.report = report


class UnsupportedError(PreconditionError):
    """The request cannot be met by the available constructions."""


class ResourceLimitError(NegotiationError):
    """An explicit exploration cap was exceeded."""

    def __init__(self, what: str, cap: int):
        super().__init__(f"{what} exceeded the cap of {cap}")
        self.cap = cap


class EncodingError(NegotiationError):
    """A machine cannot be encoded as a negotiation arena."""
