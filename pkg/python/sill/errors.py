"""Exception and warning types raised by sill.

Argument problems subclass ``ValueError`` so callers that already guard numeric
input with ``except ValueError`` keep working; failures of the numerics subclass
``RuntimeError``.
"""

from __future__ import annotations

from typing import Any

__all__ = [
    "ConsistencyError",
    "EmptyCandidateSetError",
    "EvaluationError",
    "GridError",
    "HypothesisViolation",
    "ModelValidationError",
    "NumericalError",
    "SillError",
    "SpectralParameterError",
    "TruncationWarning",
]


class SillError(Exception):
    """Base class for every error raised by sill."""


class ModelValidationError(SillError, ValueError):
    """A hopping map, interaction or model file failed validation.

    Attributes:
        location: JSON path of the offending entry, when known.
        line: 1-based line number in the model file, when known.
        column: 1-based column number in the model file, when known.
    """

    def __init__(
        self,
        message: str,
        *,
        location: str | None = None,
        line: int | None = None,
        column: int | None = None,
    ) -> None:
        self.location = location
        self.line = line
        self.column = column
        parts = [message]
        if location is not None:
            parts.append(f"at {location}")
        if line is not None:
            parts.append(f"(line {line}" + (f", column {column})" if column is not None else ")"))
        super().__init__(" ".join(parts))


class GridError(SillError, ValueError):
    """Invalid grid size or resolution schedule."""


class SpectralParameterError(SillError, ValueError):
    """The spectral parameter lies above the sampled band bottom."""


class EvaluationError(SillError, ArithmeticError):
    """A quantity could not be evaluated (non-finite integrand, zero eigenvalue).

    Attributes:
        node_index: Flat index of the offending grid node, if any.
        node: Coordinates of the offending grid node, if any.
    """

    def __init__(
        self,
        message: str,
        *,
        node_index: int | None = None,
        node: tuple[float, float, float] | None = None,
    ) -> None:
        self.node_index = node_index
        self.node = node
        super().__init__(message)


class NumericalError(SillError, RuntimeError):
    """A dense eigensolver or matrix function failed.

    Attributes:
        diagnostics: Matrix shape, norms and condition estimates gathered at failure.
    """

    def __init__(self, message: str, *, diagnostics: dict[str, Any] | None = None) -> None:
        self.diagnostics = dict(diagnostics or {})
        if self.diagnostics:
            detail = ", ".join(f"{key}={value}" for key, value in self.diagnostics.items())
            message = f"{message} [{detail}]"
        super().__init__(message)


class ConsistencyError(SillError, RuntimeError):
    """An internal identity or cross-check failed beyond its gate."""


class EmptyCandidateSetError(ConsistencyError):
    """No coupling candidate is distinguishable from the excluded value."""


class HypothesisViolation(SillError, ValueError):
    """The model does not satisfy the hypotheses an operation relies on."""


class TruncationWarning(UserWarning):
    """A coordinate-space state reaches into the truncation margin of its box."""
