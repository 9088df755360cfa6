"""Exception taxonomy shared across the package.

The CLI maps these onto its exit codes: validation problems exit 2,
checkpoint incompatibilities exit 3, evaluator failures exit 4.
"""

from __future__ import annotations


class SoceError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SoceError):
    """Malformed or inconsistent input data."""


class CompatibilityError(SoceError):
    """Checkpoints cannot be souped together (missing/shape/dtype mismatch)."""

    def __init__(self, message: str, mismatches=None):
        super().__init__(message)
        self.mismatches = list(mismatches or [])


class EvaluatorError(SoceError):
    """A recipe or checkpoint evaluation failed."""

    def __init__(self, message: str, recipe=None, stderr: str | None = None):
        super().__init__(message)
        self.recipe = recipe
        self.stderr = stderr
