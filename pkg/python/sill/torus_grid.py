"""Midpoint quadrature on the torus (-pi, pi]^3 and convolution-matrix assembly.

Nodes sit at shifted midpoints ``-pi + (j + 1/2) * 2pi/N`` with ``N`` even, so the
origin, where ``1/(eps - eps(0))`` is singular, is never sampled. Node order is
lexicographic in ``(j1, j2, j3)`` and therefore reproducible run to run.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Literal, TypeAlias

import numpy as np
import numpy.typing as npt

from sill.config import validate_schedule
from sill.errors import EvaluationError, GridError
from sill.lattice_model import HoppingCoefficients

__all__ = [
    "Kernel",
    "QuadratureResult",
    "TorusGrid",
    "convolution_matrix",
    "export_matrix",
    "integrate_refined",
    "integrate_refined_many",
    "make_grid",
    "momentum_kernel",
    "richardson",
]

logger = logging.getLogger(__name__)

FloatArray: TypeAlias = npt.NDArray[np.float64]
Integrand: TypeAlias = Callable[[FloatArray], npt.ArrayLike]
Kernel: TypeAlias = HoppingCoefficients | Callable[[FloatArray], npt.ArrayLike]

TWO_PI = 2.0 * math.pi
_ROW_BLOCK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class TorusGrid:
    """Shifted-midpoint grid with ``n_per_axis**3`` nodes and uniform weight."""

    n_per_axis: int

    def __post_init__(self) -> None:
        if self.n_per_axis % 2 or self.n_per_axis < 4:
            raise GridError(f"n_per_axis must be even and >= 4, got {self.n_per_axis}")

    @property
    def size(self) -> int:
        return self.n_per_axis**3

    @property
    def weight(self) -> float:
        return (TWO_PI / self.n_per_axis) ** 3

    @property
    def total_weight(self) -> float:
        return self.weight * self.size

    @cached_property
    def axis(self) -> FloatArray:
        n = self.n_per_axis
        return -math.pi + (np.arange(n) + 0.5) * (TWO_PI / n)

    @cached_property
    def nodes(self) -> FloatArray:
        """All nodes as an ``(N^3, 3)`` array, lexicographic in ``(j1, j2, j3)``."""
        mesh = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, 3)

    @cached_property
    def weights(self) -> FloatArray:
        return np.full(self.size, self.weight)

    @cached_property
    def reflection_index(self) -> npt.NDArray[np.intp]:
        """Index of the node ``-p_j`` for every node ``p_j``."""
        n = self.n_per_axis
        j = np.arange(n)
        mirrored = np.meshgrid(n - 1 - j, n - 1 - j, n - 1 - j, indexing="ij")
        return np.ravel_multi_index(tuple(m.reshape(-1) for m in mirrored), (n, n, n))

    def slabs(self) -> Iterator[tuple[int, FloatArray]]:
        """Yield ``(offset, nodes)`` for each fixed first index, in node order."""
        n = self.n_per_axis
        inner = np.stack(np.meshgrid(self.axis, self.axis, indexing="ij"), axis=-1).reshape(-1, 2)
        for j1, p1 in enumerate(self.axis):
            slab = np.empty((inner.shape[0], 3))
            slab[:, 0] = p1
            slab[:, 1:] = inner
            yield j1 * n * n, slab


@lru_cache(maxsize=16)
def make_grid(n_per_axis: int) -> TorusGrid:
    """Build (and cache) the shifted-midpoint grid with ``n_per_axis`` points per axis.

    Raises:
        GridError: If ``n_per_axis`` is odd or below 4.

    Example:
        >>> from sill.torus_grid import make_grid
        >>> make_grid(4).size
        64
    """
    return TorusGrid(n_per_axis)


@dataclass(frozen=True)
class QuadratureResult:
    """Midpoint values along a schedule and their extrapolation."""

    resolutions: tuple[int, ...]
    estimates: tuple[float, ...]
    value: float
    error_estimate: float

    @property
    def increments(self) -> tuple[float, ...]:
        """``|I_{k+1} - I_k|`` along the schedule."""
        return tuple(abs(b - a) for a, b in zip(self.estimates, self.estimates[1:], strict=False))


def richardson(coarse: tuple[int, float], fine: tuple[int, float], order: int = 1) -> float:
    """Eliminate an ``N^-order`` error term from two midpoint values."""
    (n1, i1), (n2, i2) = coarse, fine
    w1, w2 = float(n1) ** order, float(n2) ** order
    return (w2 * i2 - w1 * i1) / (w2 - w1)


def _midpoint(f: Integrand, grid: TorusGrid) -> FloatArray:
    partials: list[FloatArray] = []
    for offset, slab in grid.slabs():
        values = np.asarray(f(slab), dtype=np.float64)
        if values.shape[0] != slab.shape[0]:
            raise EvaluationError(
                f"integrand returned {values.shape[0]} values for {slab.shape[0]} nodes"
            )
        finite = np.isfinite(values) if values.ndim == 1 else np.isfinite(values).all(axis=1)
        if not finite.all():
            bad = int(np.flatnonzero(~finite)[0])
            node = tuple(float(x) for x in slab[bad])
            raise EvaluationError(
                f"integrand is not finite at node {offset + bad} {node} (N={grid.n_per_axis})",
                node_index=offset + bad,
                node=(node[0], node[1], node[2]),
            )
        partials.append(np.atleast_1d(values.sum(axis=0)))
    return np.sum(partials, axis=0) * grid.weight


def integrate_refined_many(
    f: Integrand,
    n_schedule: Sequence[int],
    *,
    order: int = 1,
) -> list[QuadratureResult]:
    """Integrate a vector-valued integrand over the torus along a resolution schedule.

    The integrand receives an ``(M, 3)`` array of nodes and returns ``(M,)`` or
    ``(M, K)`` values. Nodes are visited one slab at a time, so large scalar grids
    (N = 512) never materialize in full.

    Returns:
        One :class:`QuadratureResult` per component. ``value`` is the Richardson
        extrapolation of the last two resolutions, assuming an ``N^-order`` error.
    """
    schedule = validate_schedule(list(n_schedule))
    per_grid = []
    for n in schedule:
        per_grid.append(_midpoint(f, make_grid(n)))
        logger.debug("midpoint values at N=%d: %s", n, per_grid[-1])
    table = np.vstack(per_grid)
    results = []
    for column in table.T:
        estimates = tuple(float(x) for x in column)
        if len(schedule) == 1:
            value, error = estimates[0], math.nan
        else:
            value = richardson((schedule[-2], estimates[-2]), (schedule[-1], estimates[-1]), order)
            error = abs(estimates[-1] - estimates[-2])
        results.append(QuadratureResult(schedule, estimates, value, error))
    return results


def integrate_refined(
    f: Integrand,
    n_schedule: Sequence[int],
    *,
    order: int = 1,
) -> QuadratureResult:
    """Integrate a scalar integrand over the torus along a resolution schedule.

    Args:
        f: Vectorized integrand mapping ``(M, 3)`` nodes to ``(M,)`` values.
        n_schedule: Strictly increasing even resolutions.
        order: Leading error order used for Richardson extrapolation.

    Returns:
        Per-N midpoint values, their Richardson extrapolation and the error
        estimate ``|I_last - I_previous|``.

    Raises:
        EvaluationError: If ``f`` is not finite at some node.

    Example:
        >>> import numpy as np
        >>> from sill.torus_grid import integrate_refined
        >>> result = integrate_refined(lambda p: np.ones(len(p)), [4, 8])
        >>> round(result.value / (2 * np.pi) ** 3, 12)
        1.0
    """
    (result,) = integrate_refined_many(f, n_schedule, order=order)
    return result


def momentum_kernel(v_hat: HoppingCoefficients) -> Callable[[FloatArray], npt.ArrayLike]:
    """Momentum-space kernel ``v(p) = (2pi)^(-3/2) sum_s v_hat(s) exp(i (p, s))``."""
    prefactor = TWO_PI**-1.5

    def kernel(p: FloatArray) -> npt.ArrayLike:
        return prefactor * np.asarray(v_hat.fourier(p))

    return kernel


def convolution_matrix(
    kernel: Kernel,
    grid: TorusGrid,
    symmetrized: bool = False,
) -> npt.NDArray[np.float64] | npt.NDArray[np.complex128]:
    """Nystrom matrix of the convolution ``(2pi)^(-3/2) int v(p - q) f(q) dq``.

    Plain form ``M[i, j] = (2pi)^(-3/2) v(p_i - p_j) w_j``; symmetrized form
    ``S[i, j] = (2pi)^(-3/2) sqrt(w_i) v(p_i - p_j) sqrt(w_j)``.

    Args:
        kernel: Either the Fourier coefficients ``v_hat`` (assembled in low-rank
            form from its support) or a callable returning ``v`` at ``(..., 3)``
            momentum differences.
        grid: Quadrature grid.
        symmetrized: Select the symmetrized form.

    Returns:
        A real matrix when ``v_hat`` is real and even, complex otherwise.
    """
    weights = grid.weights
    row_scale = np.sqrt(weights) if symmetrized else np.ones_like(weights)
    col_scale = np.sqrt(weights) if symmetrized else weights

    if isinstance(kernel, HoppingCoefficients):
        if not kernel:
            return np.zeros((grid.size, grid.size))
        phases = grid.nodes @ kernel.sites.T.astype(np.float64)
        amplitudes = kernel.amplitudes / TWO_PI**3
        cos, sin = np.cos(phases), np.sin(phases)
        if kernel.is_real(0.0) and kernel.is_even(0.0):
            core = (cos * amplitudes.real) @ cos.T + (sin * amplitudes.real) @ sin.T
        else:
            exp = cos + 1j * sin
            core = (exp * amplitudes) @ exp.conj().T
        return np.asarray(row_scale[:, None] * core * col_scale[None, :])

    prefactor = TWO_PI**-1.5
    nodes = grid.nodes
    block = max(1, _ROW_BLOCK_ENTRIES // grid.size)
    rows: list[npt.NDArray[np.complex128]] = []
    for start in range(0, grid.size, block):
        diff = nodes[start : start + block, None, :] - nodes[None, :, :]
        rows.append(np.asarray(kernel(diff), dtype=np.complex128))
    values = np.vstack(rows)
    matrix = prefactor * row_scale[:, None] * values * col_scale[None, :]
    if not np.any(matrix.imag):
        return np.asarray(matrix.real)
    return np.asarray(matrix)


def export_matrix(
    matrix: npt.ArrayLike,
    path: str | Path,
    fmt: Literal["csv", "bin"] = "csv",
) -> Path:
    """Write a matrix for debugging, row-major.

    ``csv`` writes one row per line with 17 significant digits; complex entries
    occupy two adjacent columns (real, imaginary). ``bin`` writes raw
    little-endian ``float64``/``complex128`` data plus a ``<path>.json`` sidecar
    with ``shape`` and ``dtype``.
    """
    array = np.ascontiguousarray(matrix)
    target = Path(path)
    if fmt == "csv":
        table = array
        if np.iscomplexobj(array):
            table = np.empty((array.shape[0], 2 * array.shape[1]))
            table[:, 0::2] = array.real
            table[:, 1::2] = array.imag
        np.savetxt(target, np.atleast_2d(table), delimiter=",", fmt="%.17g")
        return target
    if fmt == "bin":
        dtype = "<c16" if np.iscomplexobj(array) else "<f8"
        array.astype(dtype).tofile(target)
        sidecar = target.with_name(target.name + ".json")
        sidecar.write_text(
            json.dumps({"shape": list(array.shape), "dtype": dtype, "order": "C"}),
            encoding="utf-8",
        )
        return target
    raise ValueError(f"unknown export format {fmt!r}; expected 'csv' or 'bin'")
