"""Shared exception types."""
from __future__ import annotations


class Text2SqlError(Exception):
    """Base class for all package errors."""


class LoadError(Text2SqlError):
    """A benchmark file or database could not be loaded."""


class ParseFailure(Text2SqlError):
    """A model completion could not be parsed into the expected structure.

    Carries the raw completion so pipeline traces can preserve it.
    """

    def __init__(self, message: str, completion: str = ""):
        super().__init__(message)
        self.completion = completion


class SqlSyntaxError(Text2SqlError):
    """SQL text falls outside the benchmark grammar."""

    def __init__(self, message: str, position: int = -1):
        super().__init__(f"{message} (token {position})" if position >= 0 else message)
        self.position = position


class UnknownColumnError(Text2SqlError):
    def __init__(self, name: str):
        super().__init__(f"unknown column: {name}")
        self.name = name


class BackendExhausted(Text2SqlError):
    """Retries against the completion endpoint were exhausted."""


class AuthError(Text2SqlError):
    """Endpoint credentials are missing or rejected."""


class CassetteMiss(Text2SqlError):
    def __init__(self, digest: str):
        super().__init__(f"no recorded response for digest {digest}")
        self.digest = digest


class EvalError(Text2SqlError):
    """The gold side of an evaluation is broken: a corpus problem, not a miss."""
