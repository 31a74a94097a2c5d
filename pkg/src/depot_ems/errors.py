"""Error types shared across the package.

Every raised error carries a stable machine-readable ``code`` string so that
callers (and the CLI) can react without parsing messages.
"""

from __future__ import annotations


class DepotEmsError(Exception):
    """Base error. ``code`` is a stable identifier, ``message`` is free text."""

    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}")


class ValidationError(DepotEmsError):
    """One or more invariant violations. ``violations`` is a list of
    (field_path, description) pairs; all violations are collected, not just
    the first."""

    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = list(violations)
        lines = "; ".join(f"{path}: {msg}" for path, msg in self.violations)
        super().__init__("VALIDATION", lines)


class IngestError(DepotEmsError):
    """File ingestion failure (PARSE, INCOMPLETE_DAY, EMPTY, OVERLAP,
    BAD_TIME, MISSING_RECORD)."""


class SolverError(DepotEmsError):
    """Solver-level failure (TOO_MANY_BINARIES, SCHEDULE_MISMATCH, ...)."""


class PceError(DepotEmsError):
    """Surrogate construction failure (ALL_FROZEN, SINGULAR_MOMENT_MATRIX,
    DEGENERATE, SIZE_LIMIT, DIMENSION_MISMATCH, EMPTY)."""


class ScenError(DepotEmsError):
    """Scenario generation failure (DEGENERATE, FROZEN_DIMENSION,
    EMPTY_HISTORY)."""
