"""Birman-Schwinger discretization and threshold classification.

For a one-particle model ``h = eps + v`` the operator ``G(lam)`` with kernel
``(2pi)^(-3/2) v(p - q) / (eps(q) - lam)`` is discretized on a shifted-midpoint
grid (Nystrom). Eigenvalues of ``G(eps(0))`` at ``-1`` signal threshold
phenomena; each eigenfunction is extended off the grid through ``psi = G psi / mu``
and classified by its value at the origin and by the square-integrability of
``psi / (eps - eps(0))``.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from typing import Any, TypeAlias

import numpy as np
import numpy.typing as npt

from sill._linalg import Matrix, eigh_checked, normalize_phase
from sill.config import DEFAULT_TOLERANCES, Tolerances, validate_schedule
from sill.errors import (
    EvaluationError,
    GridError,
    ModelValidationError,
    SpectralParameterError,
)
from sill.lattice_model import DispersionRelation, HoppingCoefficients, dispersion_eval
from sill.torus_grid import TWO_PI, TorusGrid, convolution_matrix, integrate_refined, make_grid

__all__ = [
    "BirmanSchwingerDiscretization",
    "EigenPair",
    "L2Probe",
    "OneParticleModel",
    "ProbeStatus",
    "ReportStatus",
    "ThresholdCase",
    "ThresholdReport",
    "Witness",
    "WitnessKind",
    "build_bs",
    "classify_threshold",
    "eigenpairs_near",
    "evenize",
    "extend_eigenfunction",
    "extension_polynomial",
    "l2_membership_probe",
]

logger = logging.getLogger(__name__)

FloatArray: TypeAlias = npt.NDArray[np.float64]
Samples: TypeAlias = npt.NDArray[np.float64] | npt.NDArray[np.complex128]
Eigenfunction: TypeAlias = Callable[[FloatArray], npt.ArrayLike]

HOLDER_NOTE = (
    "virtual level versus threshold eigenvalue is decided by the extended eigenfunction "
    "at the origin; the criterion assumes Hoelder regularity of v of order > 1/2, which "
    "holds here because v is a trigonometric polynomial"
)
CASE_V_NOTE = (
    "case V is excluded for interactions that are Hoelder-regular of order > 1/2; "
    "this verdict indicates a discretization artifact"
)


@dataclass(frozen=True)
class OneParticleModel:
    """Dispersion relation plus a real pair of Fourier coefficients ``v_hat``.

    Real ``v_hat`` is equivalent to ``v(p) = conj(v(-p))``.
    """

    dispersion: DispersionRelation
    interaction: HoppingCoefficients

    def __post_init__(self) -> None:
        self.dispersion.hopping.require_hermitian()
        if not self.interaction.is_real():
            raise ModelValidationError(
                "interaction coefficients must be real so that v(p) = conj(v(-p))"
            )

    @classmethod
    def from_hoppings(
        cls,
        hopping: HoppingCoefficients,
        interaction: HoppingCoefficients,
        *,
        scan_resolution: int = 32,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> OneParticleModel:
        dispersion = DispersionRelation.from_hopping(
            hopping, scan_resolution, tolerances=tolerances
        )
        return cls(dispersion, interaction)

    @property
    def threshold(self) -> float:
        """``eps(0)``, the bottom of the essential spectrum for classifiable models."""
        return self.dispersion.value_at_origin

    @property
    def threshold_classifiable(self) -> bool:
        return self.dispersion.threshold_classifiable

    @property
    def reflection_symmetric(self) -> bool:
        """Whether ``psi -> conj(psi(-p))`` commutes with ``G`` (real ``eps_hat``)."""
        return self.dispersion.hopping.is_real()

    def require_classifiable(self) -> None:
        if not self.threshold_classifiable:
            raise ModelValidationError(
                "model is not threshold-classifiable: minimum status is "
                f"{self.dispersion.minimum.status.value} at "
                f"{np.array2string(self.dispersion.minimizer, precision=6)}"
            )


@dataclass(frozen=True)
class BirmanSchwingerDiscretization:
    """Nystrom discretization of ``G(lam)`` on a grid.

    ``symmetrized_matrix`` is Hermitian; ``matrix`` (the plain form) is derived
    from it by the diagonal similarity ``D^(1/2) S D^(-1/2)`` with
    ``D = diag(eps(p_j) - lam)``.
    """

    model: OneParticleModel
    lam: float
    grid: TorusGrid
    denominators: FloatArray
    symmetrized_matrix: Matrix

    @cached_property
    def matrix(self) -> Matrix:
        root = np.sqrt(self.denominators)
        return np.asarray(root[:, None] * self.symmetrized_matrix / root[None, :])

    def _root(self, ndim: int) -> FloatArray:
        root = np.sqrt(self.denominators)
        return root[:, None] if ndim == 2 else root

    def to_symmetrized(self, samples: Samples) -> Samples:
        """Map plain-form samples (one vector or ``(N, k)`` columns) to symmetrized form."""
        return np.asarray(samples / self._root(np.ndim(samples)))

    def to_plain(self, vector: Samples) -> Samples:
        """Inverse of :meth:`to_symmetrized`, column-wise for ``(N, k)`` blocks."""
        return np.asarray(vector * self._root(np.ndim(vector)))

    def rayleigh_quotient(self, samples: Samples) -> float:
        """Eigenvalue estimate of plain-form samples through the symmetrized matrix."""
        x = self.to_symmetrized(samples)
        norm = float(np.vdot(x, x).real)
        if norm == 0.0:
            raise EvaluationError("cannot take the Rayleigh quotient of a zero vector")
        return float(np.vdot(x, self.symmetrized_matrix @ x).real / norm)


def build_bs(
    model: OneParticleModel, lam: float, grid: TorusGrid
) -> BirmanSchwingerDiscretization:
    """Discretize the Birman-Schwinger operator ``G(lam)`` on ``grid``.

    Args:
        model: One-particle model.
        lam: Spectral parameter, at most ``eps(0)``.
        grid: Shifted-midpoint grid.

    Returns:
        The discretization with its symmetrized matrix.

    Raises:
        SpectralParameterError: If ``eps(p_j) - lam <= 0`` at some node.
    """
    eps = np.asarray(dispersion_eval(model.dispersion.hopping, grid.nodes))
    denominators = eps - lam
    if np.any(denominators <= 0):
        bad = int(np.flatnonzero(denominators <= 0)[0])
        raise SpectralParameterError(
            f"eps(p) - lambda = {denominators[bad]:.3e} <= 0 at node {bad} "
            f"{tuple(grid.nodes[bad])} for lambda = {lam}"
        )
    kernel = convolution_matrix(model.interaction, grid, symmetrized=True)
    root = np.sqrt(denominators)
    symmetrized = kernel / root[:, None] / root[None, :]
    logger.debug("built Birman-Schwinger matrix of size %d at lambda=%g", grid.size, lam)
    return BirmanSchwingerDiscretization(model, float(lam), grid, denominators, symmetrized)


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue of ``G`` with plain-form eigenfunction samples on the grid."""

    value: float
    vector: Samples


def evenize(samples: Samples, grid: TorusGrid) -> Samples:
    """Return ``psi + phi`` or ``psi - phi`` (the larger) for ``phi(p) = conj(psi(-p))``.

    The result has ``|psi(p)| = |psi(-p)|`` at every node.
    """
    mirrored = np.conj(samples[grid.reflection_index])
    plus, minus = samples + mirrored, samples - mirrored
    chosen = plus if np.linalg.norm(plus) >= np.linalg.norm(minus) else minus
    return np.asarray(normalize_phase(chosen)[:, 0])


def eigenpairs_near(
    bs: BirmanSchwingerDiscretization, target: float = -1.0, count: int = 4
) -> list[EigenPair]:
    """The ``count`` eigenvalues of ``G`` nearest ``target`` with evenized eigenfunctions.

    Eigenvalues come from the symmetrized matrix; eigenvectors are mapped back to
    plain-form samples and evenized when the model is reflection symmetric.
    Pairs are returned by distance to ``target``, ties by eigenvalue.

    Raises:
        NumericalError: If the eigensolver fails.
    """
    values, vectors = eigh_checked(bs.symmetrized_matrix)
    assert vectors is not None  # nosec B101 - eigh_checked returns vectors unless asked not to
    order = sorted(range(values.size), key=lambda i: (abs(values[i] - target), values[i]))
    pairs = []
    for index in order[:count]:
        samples = bs.to_plain(vectors[:, index])
        if bs.model.reflection_symmetric:
            samples = evenize(samples, bs.grid)
        pairs.append(EigenPair(float(values[index]), samples))
    return pairs


def extension_polynomial(
    bs: BirmanSchwingerDiscretization, samples: Samples, eigenvalue: float | None = None
) -> HoppingCoefficients:
    """Trigonometric polynomial of the off-grid extension ``psi(p) = (G psi)(p) / mu``.

    ``(G psi)(p) = (2pi)^-3 sum_s v_hat(s) exp(i(p, s)) C_s`` with
    ``C_s = sum_j exp(-i(p_j, s)) w psi_j / (eps(p_j) - lam)``.

    Raises:
        EvaluationError: If ``|mu| < 1e-8``.
    """
    mu = bs.rayleigh_quotient(samples) if eigenvalue is None else eigenvalue
    if abs(mu) < 1e-8:
        raise EvaluationError(f"eigenvalue {mu:.3e} is too small to divide by")
    v_hat = bs.model.interaction
    if not v_hat:
        return HoppingCoefficients()
    weighted = bs.grid.weight * samples / bs.denominators
    phases = bs.grid.nodes @ v_hat.sites.T.astype(np.float64)
    coefficients = np.exp(-1j * phases).T @ weighted
    amplitudes = v_hat.amplitudes * coefficients / (TWO_PI**3 * mu)
    return HoppingCoefficients.from_arrays(v_hat.sites, amplitudes)


def extend_eigenfunction(
    bs: BirmanSchwingerDiscretization,
    eigenvector: Samples,
    p: Sequence[float] | FloatArray,
    eigenvalue: float | None = None,
) -> complex | npt.NDArray[np.complex128]:
    """Evaluate an eigenfunction of ``G`` at arbitrary points, notably the origin.

    Args:
        bs: The discretization the eigenvector belongs to.
        eigenvector: Plain-form samples with ``M psi = mu psi``.
        p: One point or an ``(..., 3)`` array.
        eigenvalue: ``mu``; the Rayleigh quotient is used when omitted.

    Raises:
        EvaluationError: If ``|mu| < 1e-8``.
    """
    return extension_polynomial(bs, eigenvector, eigenvalue).fourier(p)


class ProbeStatus(StrEnum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class L2Probe:
    """Growth of ``I_N = sum_j w |psi(p_j) / (eps(p_j) - eps(0))|^2`` with ``N``."""

    resolutions: tuple[int, ...]
    integrals: tuple[float, ...]
    slope: float
    status: ProbeStatus


def l2_membership_probe(
    model: OneParticleModel,
    eigenfunction: Eigenfunction,
    schedule: Sequence[int] = (32, 64, 128),
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> L2Probe:
    """Estimate whether ``psi / (eps - eps(0))`` is square-integrable.

    The slope of ``log I_N`` against ``log N`` between the last two resolutions is
    about 1 for a non-vanishing ``psi(0)`` (the integrand behaves like ``|p|^-4``)
    and about 0 when ``psi`` vanishes at the origin.

    Args:
        model: Supplies ``eps``.
        eigenfunction: Vectorized ``psi``, e.g. an extension polynomial's ``fourier``.
        schedule: At least two resolutions.
        tolerances: Slope thresholds.
    """
    resolutions = validate_schedule(list(schedule))
    if len(resolutions) < 2:
        raise GridError("the L2 probe needs at least two resolutions")
    hopping = model.dispersion.hopping
    origin = model.threshold

    def integrand(p: FloatArray) -> FloatArray:
        psi = np.asarray(eigenfunction(p))
        return np.abs(psi) ** 2 / (np.asarray(dispersion_eval(hopping, p)) - origin) ** 2

    integrals = integrate_refined(integrand, resolutions).estimates
    last, previous = integrals[-1], integrals[-2]
    if last == 0.0 and previous == 0.0:
        slope = 0.0
    elif last <= 0.0 or previous <= 0.0:
        slope = math.nan
    else:
        slope = math.log(last / previous) / math.log(resolutions[-1] / resolutions[-2])

    if math.isnan(slope):
        status = ProbeStatus.INDETERMINATE
    elif slope > tolerances.divergent_slope:
        status = ProbeStatus.DIVERGENT
    elif slope < tolerances.convergent_slope:
        status = ProbeStatus.CONVERGENT
    else:
        status = ProbeStatus.INDETERMINATE
    return L2Probe(resolutions, integrals, slope, status)


class ThresholdCase(StrEnum):
    I = "I"  # noqa: E741
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"


class ReportStatus(StrEnum):
    DETERMINATE = "determinate"
    INDETERMINATE = "indeterminate"


class WitnessKind(StrEnum):
    VIRTUAL_LEVEL = "virtual_level"
    THRESHOLD_EIGENVALUE = "threshold_eigenvalue"


@dataclass(frozen=True)
class Witness:
    """A -1 eigenfunction of ``G(eps(0))`` with its origin value and L2 probe."""

    eigenvalue: float
    psi0: complex
    psi0_relative: float
    kind: WitnessKind
    probe: L2Probe
    parity: int
    samples: Samples = field(repr=False)
    polynomial: HoppingCoefficients = field(repr=False)

    @property
    def vanishes_at_origin(self) -> bool:
        return self.kind is WitnessKind.THRESHOLD_EIGENVALUE

    @property
    def consistent(self) -> bool:
        """Whether the L2 probe agrees with the origin-value criterion."""
        expected = (
            ProbeStatus.CONVERGENT if self.vanishes_at_origin else ProbeStatus.DIVERGENT
        )
        return self.probe.status is expected

    @property
    def lr_exponent_bound(self) -> float:
        """Supremum of ``r`` with ``psi / (eps - eps(0))`` in ``L^r``."""
        return 3.0 if self.vanishes_at_origin else 1.5

    def to_dict(self) -> dict[str, Any]:
        return {
            "eigenvalue": self.eigenvalue,
            "psi0": self.psi0.real,
            "psi0_imag": self.psi0.imag,
            "psi0_relative": self.psi0_relative,
            "kind": self.kind.value,
            "parity": self.parity,
            "slope": self.probe.slope,
            "probe_status": self.probe.status.value,
            "probe_integrals": [
                [n, value]
                for n, value in zip(self.probe.resolutions, self.probe.integrals, strict=True)
            ],
            "lr_exponent_bound": self.lr_exponent_bound,
        }


@dataclass(frozen=True)
class ThresholdReport:
    """Outcome of :func:`classify_threshold`."""

    case: ThresholdCase
    status: ReportStatus
    lam: float
    schedule: tuple[int, ...]
    eigenvalues_near_minus_one: tuple[float, ...]
    cluster_by_resolution: dict[int, tuple[float, ...]]
    drift: float
    window: float
    psi0_threshold: float
    witnesses: tuple[Witness, ...]
    tolerances: Tolerances
    provenance_notes: tuple[str, ...]

    @property
    def determinate(self) -> bool:
        return self.status is ReportStatus.DETERMINATE

    @property
    def threshold_kernel_dimension(self) -> int:
        """Witnesses vanishing at the origin with convergent probes."""
        return sum(
            1
            for witness in self.witnesses
            if witness.vanishes_at_origin and witness.probe.status is ProbeStatus.CONVERGENT
        )

    @property
    def virtual_witness(self) -> Witness | None:
        return next((w for w in self.witnesses if not w.vanishes_at_origin), None)

    def to_dict(self) -> dict[str, Any]:
        return {
            "case": self.case.value,
            "status": self.status.value,
            "lambda": self.lam,
            "schedule": list(self.schedule),
            "eigenvalues": list(self.eigenvalues_near_minus_one),
            "cluster_by_resolution": {
                str(n): list(values) for n, values in self.cluster_by_resolution.items()
            },
            "drift": self.drift,
            "window": self.window,
            "psi0_threshold": self.psi0_threshold,
            "witnesses": [witness.to_dict() for witness in self.witnesses],
            "tolerances": self.tolerances.model_dump(),
            "provenance_notes": list(self.provenance_notes),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _window_values(bs: BirmanSchwingerDiscretization, half_width: float) -> FloatArray:
    values, _ = eigh_checked(
        bs.symmetrized_matrix,
        subset_by_value=(-1.0 - half_width, -1.0 + half_width),
        eigvals_only=True,
    )
    return values


def _resolution_drift(finest: FloatArray, previous: FloatArray, cap: float) -> float:
    if finest.size == 0:
        return 0.0
    if previous.size == 0:
        return cap
    return float(max(np.min(np.abs(previous - value)) for value in finest))


def _parity_classes(
    model: OneParticleModel, grid: TorusGrid, samples: Samples
) -> list[tuple[int, Samples]]:
    """Split cluster eigenfunctions into reflection-parity classes.

    Real samples are projected onto the +1 and -1 eigenspaces of
    ``psi -> psi(-p)`` as a subspace, which keeps degenerate clusters intact.
    Complex samples are evenized one by one.
    """
    if not model.reflection_symmetric:
        return [(0, samples)]
    if np.iscomplexobj(samples):
        columns = [evenize(samples[:, k], grid) for k in range(samples.shape[1])]
        return [(0, np.column_stack(columns))]

    mirrored = samples[grid.reflection_index]
    projections = {1: 0.5 * (samples + mirrored), -1: 0.5 * (samples - mirrored)}
    scale = max(float(np.linalg.norm(part, ord=2)) for part in projections.values())
    classes: list[tuple[int, Samples]] = []
    for parity, part in projections.items():
        basis, singular, _ = np.linalg.svd(part, full_matrices=False)
        keep = singular > 1e-8 * max(scale, 1e-300)
        if np.any(keep):
            classes.append((parity, normalize_phase(basis[:, keep])))
    return classes


def _rotate_to_single_origin_value(
    samples: Samples, origin_values: npt.NDArray[np.complex128]
) -> tuple[Samples, npt.NDArray[np.complex128]]:
    """Recombine columns so that only the first has a non-zero origin value."""
    norm = float(np.linalg.norm(origin_values))
    direction = np.conj(origin_values) / norm
    # Householder completion: first column along ``direction``, the rest orthogonal to it.
    complement, _ = np.linalg.qr(np.column_stack([direction, np.eye(direction.size)]))
    rotation = complement[:, : direction.size]
    rotation[:, 0] = direction
    if np.isrealobj(samples):
        rotation = rotation.real
    rotated = samples @ rotation
    return rotated, origin_values @ rotation


def classify_threshold(
    model: OneParticleModel,
    n_schedule: Sequence[int] = (8, 12, 16),
    *,
    probe_schedule: Sequence[int] = (32, 64, 128),
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ThresholdReport:
    """Classify the threshold ``eps(0)`` of a one-particle model into cases I-V.

    ``G(eps(0))`` is discretized along ``n_schedule``. Eigenvalues within the
    resolution-aware window of ``-1`` on the finest grid form the cluster; the
    window is ``clamp(5 * drift, 0.05, 0.1)`` with ``drift`` the largest change of
    a cluster eigenvalue between the last two resolutions. Cluster eigenfunctions
    are evenized, extended to the origin and probed for square-integrability.

    Cases: no -1 eigenvalue (I); a single one with ``psi(0) != 0`` (II); only
    witnesses with ``psi(0) = 0`` (III); several with exactly one ``psi(0) != 0``
    (IV); two or more witnesses failing square-integrability (V).

    Args:
        model: Threshold-classifiable one-particle model.
        n_schedule: Operator grid resolutions, strictly increasing.
        probe_schedule: Resolutions of the L2 probe.
        tolerances: Numeric gates.

    Returns:
        The threshold report; probes that neither converge nor diverge make the
        report indeterminate instead of forcing a label.

    Raises:
        ModelValidationError: If the model is not threshold-classifiable.
    """
    model.require_classifiable()
    schedule = validate_schedule(list(n_schedule))
    lam = model.threshold
    search = 2.0 * tolerances.eigenvalue_ceiling

    cluster_by_resolution: dict[int, tuple[float, ...]] = {}
    for n in schedule[:-1]:
        values = _window_values(build_bs(model, lam, make_grid(n)), search)
        cluster_by_resolution[n] = tuple(float(v) for v in values)

    finest_grid = make_grid(schedule[-1])
    bs = build_bs(model, lam, finest_grid)
    values, vectors = eigh_checked(
        bs.symmetrized_matrix,
        subset_by_value=(-1.0 - search, -1.0 + search),
    )
    cluster_by_resolution[schedule[-1]] = tuple(float(v) for v in values)

    candidates = np.abs(values + 1.0) <= tolerances.eigenvalue_ceiling
    previous = (
        np.asarray(cluster_by_resolution[schedule[-2]]) if len(schedule) > 1 else values
    )
    drift = _resolution_drift(values[candidates], previous, tolerances.eigenvalue_ceiling)
    window = tolerances.eigenvalue_window(drift)
    tau = tolerances.psi0_threshold(drift)
    in_cluster = np.abs(values + 1.0) <= window
    cluster = tuple(float(v) for v in values[in_cluster])
    logger.info(
        "threshold %g: %d eigenvalue(s) within %.3g of -1 at N=%d (drift %.3g)",
        lam,
        len(cluster),
        window,
        schedule[-1],
        drift,
    )

    notes = [HOLDER_NOTE]
    if not cluster:
        return ThresholdReport(
            case=ThresholdCase.I,
            status=ReportStatus.DETERMINATE,
            lam=lam,
            schedule=schedule,
            eigenvalues_near_minus_one=(),
            cluster_by_resolution=cluster_by_resolution,
            drift=drift,
            window=window,
            psi0_threshold=tau,
            witnesses=(),
            tolerances=tolerances,
            provenance_notes=tuple(notes),
        )

    assert vectors is not None  # nosec B101 - requested with vectors
    plain = bs.to_plain(vectors[:, in_cluster])
    witnesses: list[Witness] = []
    for parity, columns in _parity_classes(model, finest_grid, plain):
        columns = columns / np.max(np.abs(columns), axis=0)
        polynomials = [extension_polynomial(bs, columns[:, k]) for k in range(columns.shape[1])]
        origin = np.array([complex(poly.fourier(np.zeros(3))) for poly in polynomials])
        nonzero = np.abs(origin) >= tau
        if np.count_nonzero(nonzero) > 1 and parity != 0:
            columns, origin = _rotate_to_single_origin_value(columns, origin)
            columns = columns / np.max(np.abs(columns), axis=0)
            polynomials = [
                extension_polynomial(bs, columns[:, k]) for k in range(columns.shape[1])
            ]
            origin = np.array([complex(poly.fourier(np.zeros(3))) for poly in polynomials])
            notes.append(
                f"cluster basis of parity {parity:+d} recombined so that a single witness "
                "carries the value at the origin"
            )
        for k, polynomial in enumerate(polynomials):
            sample = columns[:, k]
            relative = float(abs(origin[k]) / np.max(np.abs(sample)))
            kind = (
                WitnessKind.THRESHOLD_EIGENVALUE if relative < tau else WitnessKind.VIRTUAL_LEVEL
            )
            probe = l2_membership_probe(
                model, polynomial.fourier, probe_schedule, tolerances=tolerances
            )
            witnesses.append(
                Witness(
                    eigenvalue=bs.rayleigh_quotient(sample),
                    psi0=complex(origin[k]),
                    psi0_relative=relative,
                    kind=kind,
                    probe=probe,
                    parity=parity,
                    samples=sample,
                    polynomial=polynomial,
                )
            )

    virtual = [w for w in witnesses if not w.vanishes_at_origin]
    divergent = [w for w in witnesses if w.probe.status is ProbeStatus.DIVERGENT]
    if len(witnesses) == 1:
        case = ThresholdCase.II if virtual else ThresholdCase.III
    elif not virtual and not divergent:
        case = ThresholdCase.III
    elif len(virtual) <= 1 and len(divergent) <= 1:
        case = ThresholdCase.IV if virtual else ThresholdCase.III
    else:
        case = ThresholdCase.V
        notes.append(CASE_V_NOTE)

    status = ReportStatus.DETERMINATE
    for index, witness in enumerate(witnesses):
        if not witness.consistent:
            status = ReportStatus.INDETERMINATE
            notes.append(
                f"witness {index} ({witness.kind.value}, eigenvalue {witness.eigenvalue:.6f}): "
                f"L2 probe is {witness.probe.status.value} with slope {witness.probe.slope:.3f}"
            )
    if status is ReportStatus.INDETERMINATE:
        logger.warning("threshold classification is indeterminate: %s", notes[-1])

    return ThresholdReport(
        case=case,
        status=status,
        lam=lam,
        schedule=schedule,
        eigenvalues_near_minus_one=cluster,
        cluster_by_resolution=cluster_by_resolution,
        drift=drift,
        window=window,
        psi0_threshold=tau,
        witnesses=tuple(witnesses),
        tolerances=tolerances,
        provenance_notes=tuple(notes),
    )
