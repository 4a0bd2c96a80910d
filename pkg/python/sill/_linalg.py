"""Dense Hermitian eigensolves with diagnostics and reproducible phases."""

from __future__ import annotations

from typing import Any, TypeAlias

import numpy as np
import numpy.typing as npt
import scipy.linalg

from sill.errors import NumericalError

Matrix: TypeAlias = npt.NDArray[np.float64] | npt.NDArray[np.complex128]


def hermiticity_defect(matrix: Matrix) -> float:
    """``max |A - A^H|`` entrywise."""
    return float(np.max(np.abs(matrix - matrix.conj().T), initial=0.0))


def _diagnostics(matrix: Matrix) -> dict[str, Any]:
    finite = bool(np.isfinite(matrix).all())
    info: dict[str, Any] = {"shape": matrix.shape, "finite": finite}
    if finite:
        info["max_abs"] = float(np.max(np.abs(matrix), initial=0.0))
        info["hermiticity_defect"] = hermiticity_defect(matrix)
        if matrix.shape[0] <= 2048:
            info["condition"] = float(np.linalg.cond(matrix))
    return info


def eigh_checked(
    matrix: Matrix,
    *,
    subset_by_value: tuple[float, float] | None = None,
    subset_by_index: tuple[int, int] | None = None,
    eigvals_only: bool = False,
) -> tuple[npt.NDArray[np.float64], Matrix | None]:
    """Hermitian eigendecomposition that raises :class:`NumericalError` on failure.

    Eigenvectors, when requested, are phase-normalized with :func:`normalize_phase`.
    """
    if not np.isfinite(matrix).all():
        raise NumericalError("matrix has non-finite entries", diagnostics=_diagnostics(matrix))
    try:
        if eigvals_only:
            values = scipy.linalg.eigh(
                matrix,
                eigvals_only=True,
                subset_by_value=subset_by_value,
                subset_by_index=subset_by_index,
                check_finite=False,
            )
            return np.asarray(values, dtype=np.float64), None
        values, vectors = scipy.linalg.eigh(
            matrix,
            subset_by_value=subset_by_value,
            subset_by_index=subset_by_index,
            check_finite=False,
        )
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(
            f"Hermitian eigensolver failed: {exc}", diagnostics=_diagnostics(matrix)
        ) from exc
    return np.asarray(values, dtype=np.float64), normalize_phase(vectors)


def normalize_phase(vectors: Matrix) -> Matrix:
    """Rotate each column so its first non-negligible component is positive real."""
    out = np.array(vectors, copy=True)
    if out.ndim == 1:
        out = out[:, None]
    for column in range(out.shape[1]):
        magnitude = np.abs(out[:, column])
        if magnitude.max(initial=0.0) == 0.0:
            continue
        first = int(np.flatnonzero(magnitude > 1e-12 * magnitude.max())[0])
        phase = out[first, column] / magnitude[first]
        out[:, column] = out[:, column] / phase
    if np.iscomplexobj(out):
        return out.astype(np.complex128)
    return out.astype(np.float64)
