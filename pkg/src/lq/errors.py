"""Exception hierarchy. The CLI maps each family onto an exit code."""
from __future__ import annotations


class LqError(Exception):
    """Base class for every error raised by this package."""


class ParseError(LqError):
    """Malformed text, undeclared symbol, dangling reference, unknown rule."""


class UsageError(LqError):
    """Well-formed input that the requested operation does not accept."""


class RulesetError(UsageError):
    """Unknown ruleset preset or malformed flag set."""


class NumericError(LqError):
    """Unbound grade, Meta Data violation, non-unit state and similar."""


class RuleError(LqError):
    """A rule application that cannot produce the requested conclusion.

    ``code`` is one of ``rule-absent``, ``shape-mismatch``,
    ``label-mismatch``, ``side-condition`` or ``not-a-rule``.
    """

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message
