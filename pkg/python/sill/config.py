"""Numeric gates and run configuration.

``Tolerances`` collects every threshold the numerics compare against so that a
single object travels through a run and ends up verbatim in its report.
``RunConfig`` is the validated form of the command-line options.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from sill.errors import GridError

__all__ = [
    "DEFAULT_TOLERANCES",
    "RunConfig",
    "Tolerances",
    "parse_k_grid",
    "trailing_schedule",
    "validate_schedule",
]


class Tolerances(BaseModel):
    """Thresholds used across the package.

    Example:
        >>> from sill.config import Tolerances
        >>> tol = Tolerances(eigenvalue_floor=0.04)
        >>> tol.eigenvalue_window(0.001)
        0.04
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    hermiticity: float = Field(default=1e-12, gt=0)
    imaginary: float = Field(default=1e-12, gt=0)
    cnd: float = Field(default=1e-12, ge=0)
    origin_position: float = Field(default=1e-9, gt=0)
    degenerate_hessian: float = Field(default=1e-8, gt=0)
    minimum_value: float = Field(default=1e-9, gt=0)
    eigenvalue_floor: float = Field(default=0.05, gt=0)
    eigenvalue_ceiling: float = Field(default=0.1, gt=0)
    eigenvalue_drift_factor: float = Field(default=5.0, gt=0)
    psi0_factor: float = Field(default=10.0, gt=0)
    psi0_floor: float = Field(default=1e-8, gt=0)
    psi0_ceiling: float = Field(default=0.1, gt=0)
    divergent_slope: float = 0.5
    convergent_slope: float = 0.1
    margin_floor: float = Field(default=1e-8, gt=0)
    band_degeneracy: float = Field(default=1e-9, gt=0)
    positivity: float = Field(default=1e-12, ge=0)
    identity_gate_factor: float = Field(default=10.0, gt=0)
    identity_gate_floor: float = Field(default=1e-6, gt=0)
    constant_error: float = Field(default=1e-2, gt=0)
    analytic_overlap: float = Field(default=0.95, gt=0, le=1)

    @model_validator(mode="after")
    def _check_ordering(self) -> Self:
        if self.eigenvalue_floor > self.eigenvalue_ceiling:
            raise ValueError(
                f"eigenvalue_floor ({self.eigenvalue_floor}) exceeds "
                f"eigenvalue_ceiling ({self.eigenvalue_ceiling})"
            )
        if self.psi0_floor > self.psi0_ceiling:
            raise ValueError(
                f"psi0_floor ({self.psi0_floor}) exceeds psi0_ceiling ({self.psi0_ceiling})"
            )
        if self.convergent_slope >= self.divergent_slope:
            raise ValueError(
                f"convergent_slope ({self.convergent_slope}) must be below "
                f"divergent_slope ({self.divergent_slope})"
            )
        return self

    def eigenvalue_window(self, drift: float) -> float:
        """Half-width of the window around -1 for a given resolution drift."""
        scaled = self.eigenvalue_drift_factor * drift
        return min(self.eigenvalue_ceiling, max(self.eigenvalue_floor, scaled))

    def psi0_threshold(self, drift: float) -> float:
        """Relative threshold below which an extended value at the origin counts as zero."""
        return min(self.psi0_ceiling, max(self.psi0_floor, self.psi0_factor * drift))

    def identity_gate(self, error_estimate: float) -> float:
        """Largest admissible residual of an exact identity given a quadrature error."""
        return max(self.identity_gate_floor, self.identity_gate_factor * error_estimate)


DEFAULT_TOLERANCES = Tolerances()


def validate_schedule(
    schedule: tuple[int, ...] | list[int], *, minimum: int = 4
) -> tuple[int, ...]:
    """Check a resolution schedule: even entries, at least ``minimum``, strictly increasing.

    Raises:
        GridError: If the schedule is empty or violates one of the rules.
    """
    values = tuple(int(n) for n in schedule)
    if not values:
        raise GridError("schedule must contain at least one resolution")
    for n in values:
        if n % 2 or n < minimum:
            raise GridError(f"schedule entries must be even and >= {minimum}, got {n}")
    if any(b <= a for a, b in zip(values, values[1:], strict=False)):
        raise GridError(f"schedule must be strictly increasing, got {list(values)}")
    return values


def trailing_schedule(n: int, *, step: int = 4, count: int = 3) -> tuple[int, ...]:
    """Resolutions ending at ``n`` in steps of ``step``, never below 4.

    Example:
        >>> trailing_schedule(16)
        (8, 12, 16)
    """
    return tuple(sorted({max(4, n - step * i) for i in range(count)}))


def parse_k_grid(spec: str) -> tuple[tuple[float, float, float], ...]:
    """Expand an ``AxBxC`` quasi-momentum grid specification.

    Axis ``i`` with ``A`` points uses ``2*pi*j/A`` for ``j = 0..A-1`` wrapped into
    ``(-pi, pi]``, so every grid contains ``k = 0``. Points are ordered
    lexicographically in ``(j1, j2, j3)``.

    Example:
        >>> len(parse_k_grid("3x3x3"))
        27
    """
    parts = spec.lower().split("x")
    if len(parts) != 3:
        raise GridError(f"k-grid must look like AxBxC, got {spec!r}")
    try:
        counts = [int(part) for part in parts]
    except ValueError as exc:
        raise GridError(f"k-grid must look like AxBxC, got {spec!r}") from exc
    if any(count < 1 for count in counts):
        raise GridError(f"k-grid counts must be positive, got {spec!r}")

    axes = [[_wrap(2.0 * math.pi * j / count) for j in range(count)] for count in counts]
    return tuple((k1, k2, k3) for k1 in axes[0] for k2 in axes[1] for k3 in axes[2])


def _wrap(x: float) -> float:
    return math.pi - (math.pi - x) % (2.0 * math.pi)


class RunConfig(BaseModel):
    """Validated command-line configuration shared by all subcommands."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    model_path: Path | None = None
    grid_n: int = 16
    n_schedule: tuple[int, ...] | None = None
    probe_schedule: tuple[int, ...] = (32, 64, 128)
    k_list: tuple[tuple[float, float, float], ...] = ()
    output_path: Path | None = None
    margin: float | None = Field(default=None, gt=0)
    jobs: int = Field(default=1, ge=1)
    max_n: int | None = Field(default=None, ge=4)
    tolerances: Tolerances = DEFAULT_TOLERANCES

    @field_validator("grid_n")
    @classmethod
    def _even_grid(cls, value: int) -> int:
        if value % 2 or value < 4:
            raise ValueError(f"grid_n must be even and >= 4, got {value}")
        return value

    @field_validator("n_schedule", "probe_schedule")
    @classmethod
    def _schedule(cls, value: tuple[int, ...] | None) -> tuple[int, ...] | None:
        return None if value is None else validate_schedule(value)

    def schedule_or(self, default: tuple[int, ...]) -> tuple[int, ...]:
        """The requested schedule (or ``default``) with resolutions above ``max_n`` dropped.

        When every resolution exceeds ``max_n`` the schedule collapses to ``(max_n,)``.
        """
        schedule = self.n_schedule or default
        if self.max_n is None:
            return schedule
        capped = tuple(n for n in schedule if n <= self.max_n)
        return capped or (self.max_n - self.max_n % 2,)

    @property
    def effective_grid_n(self) -> int:
        if self.max_n is None:
            return self.grid_n
        return min(self.grid_n, self.max_n - self.max_n % 2)

    @field_validator("k_list")
    @classmethod
    def _k_in_torus(
        cls, value: tuple[tuple[float, float, float], ...]
    ) -> tuple[tuple[float, float, float], ...]:
        for k in value:
            if not all(-math.pi < component <= math.pi for component in k):
                raise ValueError(f"k entries must lie in (-pi, pi], got {k}")
        return value
