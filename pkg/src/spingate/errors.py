"""Exception types shared across the toolkit.

Validation problems (bad values, malformed files, misaligned gates) derive
from ValueError so callers can treat them uniformly; numeric failures such
as a fit that never converges derive from RuntimeError.
"""

from __future__ import annotations


class SpingateError(Exception):
    """Base class for all toolkit errors."""


class GateError(SpingateError, ValueError):
    """Gate window violates a constraint (period bound, finiteness, alignment)."""


class MetricError(SpingateError, ValueError):
    """A figure of merit is undefined for the given counts or rates."""


class ConfigError(SpingateError, ValueError):
    """Config file rejected. Carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ParseError(SpingateError, ValueError):
    """Data file rejected. Carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FitError(SpingateError, RuntimeError):
    """Least-squares fit failed (degenerate data or similar)."""


class NonConvergenceError(FitError):
    """Fit hit the iteration cap. Carries the last iterate for diagnostics."""

    def __init__(self, message: str, last_params=None, residual_norm: float | None = None):
        super().__init__(message)
        self.last_params = last_params
        self.residual_norm = residual_norm
