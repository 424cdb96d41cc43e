"""Semantic exception hierarchy.

Public functions never raise bare ValueError/RuntimeError; callers (in
particular the CLI) map these classes onto exit codes.
"""

from __future__ import annotations


class SublexpError(Exception):
    """Base class for all package errors."""


class ValidationError(SublexpError, ValueError):
    """Inputs violate a documented contract (domain, shape, invariant)."""


class GuardError(ValidationError):
    """A brute-force oracle was asked to run outside its guarded domain."""


class StateCapError(SublexpError):
    """The dynamic program exceeded the configured reachable-state cap."""

    def __init__(self, count: int, cap: int) -> None:
        super().__init__(f"reachable state count {count} exceeds cap {cap}")
        self.count = count
        self.cap = cap


class PDEStabilityError(SublexpError):
    """The explicit scheme's monotonicity/stability bound is violated."""


class PDENumericsError(SublexpError):
    """Non-finite values appeared during time stepping."""
