"""Semantic exception hierarchy shared across the package."""

from __future__ import annotations


class KernelflowError(Exception):
    """Base class for all kernelflow errors."""


class DomainMismatchError(KernelflowError):
    """Spaces, maps or supports do not line up as required."""


class IncoherentPairError(KernelflowError):
    """A coherent pair was required but validation failed."""

    def __init__(self, message: str, violations: tuple = ()):
        super().__init__(message)
        self.violations = violations


class IndeterminateScoreError(KernelflowError):
    """An increment of the form inf - inf was encountered."""

    def __init__(self, message: str, rounds: tuple = ()):
        super().__init__(message)
        self.rounds = rounds


class IntegrationToleranceError(KernelflowError):
    """The integrator could not meet its requested tolerance."""

    def __init__(self, message: str, achieved: float, partial=None):
        super().__init__(message)
        self.achieved = achieved
        self.partial = partial


class DocumentParseError(KernelflowError):
    """A text document is malformed; carries the offending position."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
