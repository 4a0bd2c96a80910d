"""An explicit threshold with both a virtual level and a threshold eigenvalue.

The model is the standard Laplacian ``eps(q) = 2 sum(1 - cos q_i)`` perturbed by
the seven-site potential ``v_hat(0) = mu``, ``v_hat(+-e_i) = lam / 2``. Its
Birman-Schwinger operator at the threshold has rank seven and leaves two small
subspaces invariant: ``span{sin p_i}`` (odd) and ``span{cos p_i, 1}`` (even).
The matrices of those restrictions are built from five lattice Green constants

    a = <1/eps>, c = <cos q_1/eps>, s = <sin^2 q_1/eps>,
    b = <cos^2 q_1/eps>, d = <cos q_1 cos q_2/eps>,

where ``<f> = (2pi)^-3 int f``. For ``lam`` in ``{-1/s, -1/(b-d)}`` (away from
``-2a/c``) and ``mu = mu(lam)`` the operator has ``-1`` eigenfunctions both
vanishing and not vanishing at the origin.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Any, TypeAlias

import numpy as np
import numpy.typing as npt
import scipy.linalg

from sill._linalg import eigh_checked
from sill.birman_schwinger import (
    OneParticleModel,
    ThresholdCase,
    ThresholdReport,
    Witness,
    build_bs,
    classify_threshold,
    eigenpairs_near,
    extension_polynomial,
)
from sill.config import DEFAULT_TOLERANCES, Tolerances, trailing_schedule, validate_schedule
from sill.errors import ConsistencyError, EmptyCandidateSetError
from sill.lattice_model import HoppingCoefficients, standard_laplacian
from sill.torus_grid import integrate_refined_many, make_grid, richardson
from sill.two_particle import TwoParticleModel

__all__ = [
    "A_LOWER_BOUND",
    "AnalyticFamily",
    "CoexistenceParams",
    "CoexistenceReport",
    "CoexistenceRun",
    "LambdaCandidate",
    "LatticeConstants",
    "SubspaceBlocks",
    "coexistence_parameters",
    "coexistence_report",
    "gamma_of_lambda",
    "invariant_subspace_matrices",
    "lattice_constants",
    "mu_of_lambda",
    "pair_coexistence_model",
    "standard_coexistence_model",
    "zd_potential",
]

logger = logging.getLogger(__name__)

FloatArray: TypeAlias = npt.NDArray[np.float64]

A_LOWER_BOUND = 11.0 / 51.0
CONSTANT_NAMES = ("a", "b", "c", "d", "s")

SIGN_CONVENTION_NOTE = (
    "the even block maps (1, 1, 1, gamma) to -(1, 1, 1, gamma); a printed form of this "
    "identity with +(1, 1, 1, gamma) contradicts the defining relations and is treated as a typo"
)
CARDINALITY_NOTE = (
    "whether the candidate set has one or two points is reported with quadrature error bars "
    "and not asserted"
)


def zd_potential(lam: float, mu: float) -> HoppingCoefficients:
    """Seven-site potential with ``v(p) = (2pi)^-3/2 (mu + lam sum cos p_i)``.

    Example:
        >>> from sill.coexistence import zd_potential
        >>> len(zd_potential(2.0, 1.0))
        7
    """
    entries: dict[tuple[int, int, int], complex] = {(0, 0, 0): mu}
    for axis in range(3):
        for sign in (1, -1):
            site = [0, 0, 0]
            site[axis] = sign
            entries[(site[0], site[1], site[2])] = lam / 2.0
    return HoppingCoefficients.from_entries(entries)


def standard_coexistence_model(lam: float, mu: float) -> OneParticleModel:
    """The standard Laplacian plus :func:`zd_potential` as a one-particle model."""
    return OneParticleModel.from_hoppings(standard_laplacian(), zd_potential(lam, mu))


def pair_coexistence_model(lam: float, mu: float) -> TwoParticleModel:
    """Two particles with ``sum(1 - cos p_i)`` each, so ``E_0`` is the standard Laplacian."""
    half = standard_laplacian(0.5)
    return TwoParticleModel.from_hoppings(half, half, zd_potential(lam, mu))


def _constant_integrand(p: FloatArray) -> FloatArray:
    cos = np.cos(p)
    eps = 2.0 * (3.0 - cos.sum(axis=-1))
    sin1 = np.sin(p[:, 0])
    columns = (
        np.ones_like(eps),
        cos[:, 0],
        cos[:, 0] ** 2,
        cos[:, 0] * cos[:, 1],
        sin1**2,
    )
    return np.stack(columns, axis=1) / eps[:, None] / (2.0 * math.pi) ** 3


@dataclass(frozen=True)
class LatticeConstants:
    """Green constants with error bars and the identities they satisfy."""

    a: float
    b: float
    c: float
    d: float
    s: float
    errors: dict[str, float]
    schedule: tuple[int, ...]
    estimates: dict[str, tuple[float, ...]]
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    @staticmethod
    def _residuals(a: float, b: float, c: float, d: float, s: float) -> dict[str, float]:
        return {
            "a-c-1/6": a - c - 1.0 / 6.0,
            "b+2d-3c": b + 2.0 * d - 3.0 * c,
            "a-b-s": a - b - s,
            "s-1/6+2(b-d)/3": s - 1.0 / 6.0 + 2.0 * (b - d) / 3.0,
        }

    @property
    def identity_residuals(self) -> dict[str, float]:
        return self._residuals(self.a, self.b, self.c, self.d, self.s)

    @property
    def residuals_by_resolution(self) -> dict[int, dict[str, float]]:
        """Identity residuals of the raw midpoint values at every resolution."""
        table: dict[int, dict[str, float]] = {}
        for index, n in enumerate(self.schedule):
            values = [self.estimates[name][index] for name in ("a", "b", "c", "d", "s")]
            table[n] = self._residuals(*values)
        return table

    @property
    def identity_gates(self) -> dict[str, float]:
        err = {name: (e if math.isfinite(e) else 0.0) for name, e in self.errors.items()}
        combined = {
            "a-c-1/6": err["a"] + err["c"],
            "b+2d-3c": err["b"] + 2.0 * err["d"] + 3.0 * err["c"],
            "a-b-s": err["a"] + err["b"] + err["s"],
            "s-1/6+2(b-d)/3": err["s"] + (2.0 / 3.0) * (err["b"] + err["d"]),
        }
        return {name: self.tolerances.identity_gate(value) for name, value in combined.items()}

    @property
    def identities_pass(self) -> bool:
        gates = self.identity_gates
        return all(abs(value) <= gates[name] for name, value in self.identity_residuals.items())

    @property
    def converged(self) -> bool:
        """Every error bar is finite and below ``tolerances.constant_error``."""
        return all(
            math.isfinite(error) and error <= self.tolerances.constant_error
            for error in self.errors.values()
        )

    @property
    def a_exceeds_lower_bound(self) -> bool:
        """``a > 11/51`` after subtracting its error bar."""
        error = self.errors["a"] if math.isfinite(self.errors["a"]) else 0.0
        return self.a - error > A_LOWER_BOUND

    @property
    def passed(self) -> bool:
        return self.identities_pass and self.converged and self.a_exceeds_lower_bound

    def to_dict(self) -> dict[str, Any]:
        return {
            **{name: getattr(self, name) for name in CONSTANT_NAMES},
            "errors": dict(self.errors),
            "schedule": list(self.schedule),
            "estimates": {name: list(values) for name, values in self.estimates.items()},
            "a_lower_bound": A_LOWER_BOUND,
            "a_exceeds_lower_bound": self.a_exceeds_lower_bound,
            "converged": self.converged,
        }


def lattice_constants(
    n_schedule: Sequence[int] = (64, 128, 256),
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> LatticeConstants:
    """Compute ``a, b, c, d, s`` by refined midpoint quadrature in a single pass.

    Values are Richardson-extrapolated from the last two resolutions; error bars
    are the last increments.

    Raises:
        ConsistencyError: If an identity residual exceeds its gate.

    Example:
        >>> from sill.coexistence import lattice_constants
        >>> constants = lattice_constants((16, 32))
        >>> round(constants.a - constants.c, 9)
        0.166666667
    """
    schedule = validate_schedule(list(n_schedule))
    if schedule[-1] < 256:
        logger.warning(
            "lattice constants at N <= %d carry error bars above the reference accuracy",
            schedule[-1],
        )
    a, c, b, d, s = integrate_refined_many(_constant_integrand, schedule, order=1)
    results = {"a": a, "b": b, "c": c, "d": d, "s": s}
    constants = LatticeConstants(
        a=a.value,
        b=b.value,
        c=c.value,
        d=d.value,
        s=s.value,
        errors={name: result.error_estimate for name, result in results.items()},
        schedule=schedule,
        estimates={name: result.estimates for name, result in results.items()},
        tolerances=tolerances,
    )
    gates = constants.identity_gates
    for name, residual in constants.identity_residuals.items():
        if abs(residual) > gates[name]:
            raise ConsistencyError(
                f"identity {name} has residual {residual:.3e} above its gate {gates[name]:.3e}"
            )
    logger.info(
        "lattice constants a=%.6f c=%.6f s=%.6f at N=%d", a.value, c.value, s.value, schedule[-1]
    )
    return constants


def gamma_of_lambda(constants: LatticeConstants, lam: float) -> float:
    """``gamma(lam) = -1 / (lam c) - 3``."""
    return -1.0 / (lam * constants.c) - 3.0


def mu_of_lambda(constants: LatticeConstants, lam: float) -> float:
    """``mu(lam) = -(1 + 3 lam c) / (a + lam c / 2)``."""
    return -(1.0 + 3.0 * lam * constants.c) / (constants.a + lam * constants.c / 2.0)


@dataclass(frozen=True)
class LambdaCandidate:
    label: str
    lam: float
    error: float
    excluded: bool
    gamma: float
    mu: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "lambda": self.lam,
            "error": self.error,
            "excluded": self.excluded,
            "gamma": self.gamma,
            "mu": self.mu,
            "psi0_expected": self.gamma + 3.0,
        }


@dataclass(frozen=True)
class CoexistenceParams:
    candidates: tuple[LambdaCandidate, ...]
    excluded_value: float
    excluded_error: float

    @property
    def accepted(self) -> tuple[LambdaCandidate, ...]:
        return tuple(c for c in self.candidates if not c.excluded)

    @property
    def candidates_coincide(self) -> bool:
        """Whether the two candidates are numerically indistinguishable."""
        first, second = self.candidates
        return abs(first.lam - second.lam) <= first.error + second.error

    @property
    def cardinality(self) -> int:
        """Number of numerically distinct accepted candidates (1 or 2)."""
        accepted = self.accepted
        if len(accepted) == 2 and self.candidates_coincide:
            return 1
        return len(accepted)

    def to_dict(self) -> dict[str, Any]:
        return {
            "candidates": [c.to_dict() for c in self.candidates],
            "excluded_value": self.excluded_value,
            "excluded_error": self.excluded_error,
            "cardinality": self.cardinality,
            "candidates_coincide": self.candidates_coincide,
        }


def _bar(value: float) -> float:
    return value if math.isfinite(value) else 0.0


def coexistence_parameters(constants: LatticeConstants) -> CoexistenceParams:
    """Filter ``{-1/s, -1/(b-d)}`` against ``-2a/c`` and attach ``gamma`` and ``mu``.

    Raises:
        EmptyCandidateSetError: If both candidates fall within error of ``-2a/c``.
        ConsistencyError: If ``mu(lam) (3c + a gamma(lam)) + gamma(lam)`` is not zero.
    """
    err = {name: _bar(value) for name, value in constants.errors.items()}
    a, b, c, d, s = (constants.a, constants.b, constants.c, constants.d, constants.s)
    excluded = -2.0 * a / c
    excluded_error = 2.0 * (err["a"] / abs(c) + abs(a) * err["c"] / c**2)
    raw = (
        ("-1/s", -1.0 / s, err["s"] / s**2),
        ("-1/(b-d)", -1.0 / (b - d), (err["b"] + err["d"]) / (b - d) ** 2),
    )
    candidates = []
    for label, lam, error in raw:
        is_excluded = abs(lam - excluded) <= error + excluded_error
        gamma = gamma_of_lambda(constants, lam)
        mu = math.nan if is_excluded else mu_of_lambda(constants, lam)
        if not is_excluded:
            defect = mu * (3.0 * c + a * gamma) + gamma
            if abs(defect) > 1e-10 * max(1.0, abs(mu), abs(gamma)):
                raise ConsistencyError(
                    f"mu(lambda)(3c + a gamma) + gamma = {defect:.3e} for lambda = {lam}"
                )
        candidates.append(LambdaCandidate(label, lam, error, is_excluded, gamma, mu))
    params = CoexistenceParams(tuple(candidates), excluded, excluded_error)
    if not params.accepted:
        raise EmptyCandidateSetError(
            f"both candidates {[round(c.lam, 6) for c in candidates]} are within error of "
            f"-2a/c = {excluded:.6f}; the quadrature is not resolving the constants"
        )
    return params


@dataclass(frozen=True)
class SubspaceBlocks:
    """Matrices of ``G(0)`` on the odd and even invariant subspaces."""

    odd: FloatArray
    even: FloatArray
    odd_eigenvalues: FloatArray
    even_eigenvalues: npt.NDArray[np.complex128]
    even_eigenvectors: npt.NDArray[np.complex128]

    @property
    def eigenvalues(self) -> npt.NDArray[np.complex128]:
        return np.concatenate([self.odd_eigenvalues.astype(np.complex128), self.even_eigenvalues])

    def even_residual(self, gamma: float) -> float:
        """``max |E x + x|`` for ``x = (1, 1, 1, gamma)``."""
        vector = np.array([1.0, 1.0, 1.0, gamma])
        return float(np.max(np.abs(self.even @ vector + vector)))


def invariant_subspace_matrices(
    constants: LatticeConstants, lam: float, mu: float
) -> SubspaceBlocks:
    """Odd block ``lam s I_3`` in ``sin p_i`` and the even block in ``(cos p_1..3, 1)``."""
    a, b, c, d, s = (constants.a, constants.b, constants.c, constants.d, constants.s)
    odd = lam * s * np.eye(3)
    even = np.array(
        [
            [lam * b, lam * d, lam * d, lam * c],
            [lam * d, lam * b, lam * d, lam * c],
            [lam * d, lam * d, lam * b, lam * c],
            [mu * c, mu * c, mu * c, mu * a],
        ]
    )
    values, vectors = scipy.linalg.eig(even)
    order = np.argsort(values.real)
    return SubspaceBlocks(
        odd=odd,
        even=even,
        odd_eigenvalues=np.linalg.eigvalsh(odd),
        even_eigenvalues=np.asarray(values[order], dtype=np.complex128),
        even_eigenvectors=np.asarray(vectors[:, order], dtype=np.complex128),
    )


class AnalyticFamily(StrEnum):
    SINE = "sine"
    COSINE_DIFFERENCE = "cosine_difference"
    VIRTUAL = "virtual"


def _family_bases(nodes: FloatArray, gamma: float) -> dict[AnalyticFamily, FloatArray]:
    cos, sin = np.cos(nodes), np.sin(nodes)
    families = {
        AnalyticFamily.SINE: sin,
        AnalyticFamily.COSINE_DIFFERENCE: np.column_stack(
            [cos[:, 0] - cos[:, 1], cos[:, 0] - cos[:, 2]]
        ),
        AnalyticFamily.VIRTUAL: (gamma + cos.sum(axis=1))[:, None],
    }
    return {family: np.linalg.qr(basis)[0] for family, basis in families.items()}


def _overlap(basis: FloatArray, samples: npt.NDArray[Any]) -> float:
    norm = float(np.linalg.norm(samples))
    if norm == 0.0:
        return 0.0
    return float(np.linalg.norm(basis.T @ samples) / norm)


def _hausdorff(first: npt.NDArray[Any], second: npt.NDArray[Any]) -> float:
    distances = np.abs(first[:, None] - second[None, :])
    return float(max(distances.min(axis=1).max(), distances.min(axis=0).max()))


@dataclass(frozen=True)
class WitnessOverlap:
    eigenvalue: float
    kind: str
    family: AnalyticFamily
    overlaps: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "eigenvalue": self.eigenvalue,
            "kind": self.kind,
            "family": self.family.value,
            "overlaps": dict(self.overlaps),
        }


@dataclass(frozen=True)
class CoexistenceRun:
    """Numerical confirmation for one accepted ``lam``."""

    candidate: LambdaCandidate
    report: ThresholdReport
    blocks: SubspaceBlocks
    overlaps: tuple[WitnessOverlap, ...]
    cluster_spread: dict[int, float]
    psi0_by_resolution: dict[int, float]
    psi0_extrapolated: float
    hausdorff_by_resolution: dict[int, float]

    @property
    def coexistence(self) -> bool:
        return self.report.case is ThresholdCase.IV

    @property
    def psi0_expected(self) -> float:
        return self.candidate.gamma + 3.0

    @property
    def psi0_relative_error(self) -> float:
        return abs(self.psi0_extrapolated - self.psi0_expected) / abs(self.psi0_expected)

    @property
    def multiplicity(self) -> dict[str, int]:
        """Cluster members per analytic family."""
        counts = {family.value: 0 for family in AnalyticFamily}
        for overlap in self.overlaps:
            counts[overlap.family.value] += 1
        return counts

    def to_dict(self) -> dict[str, Any]:
        return {
            "lambda": self.candidate.lam,
            "mu": self.candidate.mu,
            "gamma": self.candidate.gamma,
            "case": self.report.case.value,
            "status": self.report.status.value,
            "eigen_cluster": list(self.report.eigenvalues_near_minus_one),
            "cluster_spread": {str(n): v for n, v in self.cluster_spread.items()},
            "multiplicity": self.multiplicity,
            "overlaps": [overlap.to_dict() for overlap in self.overlaps],
            "psi0_by_resolution": {str(n): v for n, v in self.psi0_by_resolution.items()},
            "psi0_extrapolated": self.psi0_extrapolated,
            "psi0_expected": self.psi0_expected,
            "psi0_relative_error": self.psi0_relative_error,
            "subspace_eigenvalues": [
                [float(v.real), float(v.imag)] for v in self.blocks.eigenvalues
            ],
            "even_block_residual": self.blocks.even_residual(self.candidate.gamma),
            "hausdorff_by_resolution": {
                str(n): v for n, v in self.hausdorff_by_resolution.items()
            },
            "threshold_report": self.report.to_dict(),
        }


@dataclass(frozen=True)
class CoexistenceReport:
    constants: LatticeConstants
    params: CoexistenceParams
    runs: tuple[CoexistenceRun, ...]
    notes: tuple[str, ...]

    @property
    def passed(self) -> bool:
        """Constants pass their checks and some candidate shows coexistence."""
        return self.constants.passed and any(run.coexistence for run in self.runs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "constants": self.constants.to_dict(),
            "identities": {
                "residuals": self.constants.identity_residuals,
                "gates": self.constants.identity_gates,
                "passed": self.constants.identities_pass,
            },
            "lambda_candidates": self.params.to_dict(),
            "runs": [run.to_dict() for run in self.runs],
            "passed": self.passed,
            "provenance_notes": list(self.notes),
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _normalized_origin_value(pairs_model: OneParticleModel, n: int, window: float) -> float:
    """``psi(0)`` of the even -1 eigenfunction scaled to unit ``cos p_i`` coefficients."""
    bs = build_bs(pairs_model, pairs_model.threshold, make_grid(n))
    best: tuple[float, float] | None = None
    for pair in eigenpairs_near(bs, -1.0, count=8):
        if abs(pair.value + 1.0) > window:
            continue
        polynomial = extension_polynomial(bs, pair.vector, pair.value)
        cos_coefficient = sum(
            polynomial.entry(axis) + polynomial.entry(tuple(-x for x in axis))
            for axis in ((1, 0, 0), (0, 1, 0), (0, 0, 1))
        ) / 3.0
        if abs(cos_coefficient) < 1e-12:
            continue
        origin = complex(polynomial.fourier(np.zeros(3)))
        relative = abs(origin) / float(np.max(np.abs(pair.vector)))
        if best is None or relative > best[0]:
            best = (relative, float((origin / cos_coefficient).real))
    if best is None:
        raise ConsistencyError(f"no even -1 eigenfunction with a value at the origin at N={n}")
    return best[1]


def _classify_overlaps(
    witnesses: Sequence[Witness], nodes: FloatArray, gamma: float, gate: float
) -> tuple[WitnessOverlap, ...]:
    bases = _family_bases(nodes, gamma)
    results = []
    for witness in witnesses:
        scores = {family.value: _overlap(basis, witness.samples) for family, basis in bases.items()}
        best = max(AnalyticFamily, key=lambda family: scores[family.value])
        if scores[best.value] < gate:
            raise ConsistencyError(
                f"witness with eigenvalue {witness.eigenvalue:.6f} overlaps no analytic "
                f"eigenfunction above {gate} (best {best.value}: {scores[best.value]:.3f}); "
                "the discretization failed"
            )
        results.append(WitnessOverlap(witness.eigenvalue, witness.kind.value, best, scores))
    return tuple(results)


def _run_candidate(
    constants: LatticeConstants,
    candidate: LambdaCandidate,
    operator_schedule: tuple[int, ...],
    probe_schedule: Sequence[int],
    tolerances: Tolerances,
) -> CoexistenceRun:
    model = standard_coexistence_model(candidate.lam, candidate.mu)
    report = classify_threshold(
        model, operator_schedule, probe_schedule=probe_schedule, tolerances=tolerances
    )
    blocks = invariant_subspace_matrices(constants, candidate.lam, candidate.mu)
    grid = make_grid(operator_schedule[-1])
    overlaps = _classify_overlaps(
        report.witnesses, grid.nodes, candidate.gamma, tolerances.analytic_overlap
    )

    spread: dict[int, float] = {}
    for n, values in report.cluster_by_resolution.items():
        near = [abs(v + 1.0) for v in values if abs(v + 1.0) <= tolerances.eigenvalue_ceiling]
        spread[n] = max(near, default=math.nan)

    psi0 = {
        n: _normalized_origin_value(model, n, tolerances.eigenvalue_ceiling)
        for n in operator_schedule
    }
    if len(operator_schedule) > 1:
        coarse, fine = operator_schedule[-2], operator_schedule[-1]
        extrapolated = richardson((coarse, psi0[coarse]), (fine, psi0[fine]), order=1)
    else:
        extrapolated = psi0[operator_schedule[-1]]

    analytic = blocks.eigenvalues
    analytic = analytic[np.abs(analytic) > 1e-12]
    hausdorff: dict[int, float] = {}
    for n in operator_schedule:
        values, _ = eigh_checked(
            build_bs(model, model.threshold, make_grid(n)).symmetrized_matrix, eigvals_only=True
        )
        significant = values[np.abs(values) > 1e-10 * max(1.0, float(np.abs(values).max()))]
        hausdorff[n] = _hausdorff(significant.astype(np.complex128), analytic)

    run = CoexistenceRun(
        candidate=candidate,
        report=report,
        blocks=blocks,
        overlaps=overlaps,
        cluster_spread=spread,
        psi0_by_resolution=psi0,
        psi0_extrapolated=extrapolated,
        hausdorff_by_resolution=hausdorff,
    )
    logger.info(
        "lambda=%s: case %s, multiplicity %s, psi(0) %.4f vs %.4f",
        candidate.label,
        report.case.value,
        run.multiplicity,
        extrapolated,
        run.psi0_expected,
    )
    return run


def coexistence_report(
    n_schedule: Sequence[int] = (64, 128, 256),
    grid_n: int = 16,
    *,
    constants: LatticeConstants | None = None,
    probe_schedule: Sequence[int] = (32, 64, 128),
    jobs: int = 1,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> CoexistenceReport:
    """Confirm coexistence of a virtual level and a threshold eigenvalue numerically.

    For every accepted ``lam`` with ``mu = mu(lam)`` the one-particle model is
    classified on the operator grids ``(grid_n - 8, grid_n - 4, grid_n)``. Each
    -1 witness is matched to an analytic eigenfunction (``sin p_i``,
    ``cos p_i - cos p_j`` or ``gamma + sum cos p_i``) by normalized overlap, and the
    virtual level's ``psi(0)``, scaled to unit cosine coefficients, is
    Richardson-extrapolated and compared with ``gamma + 3``.

    Args:
        n_schedule: Resolutions for the lattice constants.
        grid_n: Finest operator grid.
        constants: Precomputed constants; computed from ``n_schedule`` otherwise.
        probe_schedule: Resolutions of the L2 probes.
        jobs: Candidates evaluated in parallel.
        tolerances: Numeric gates.

    Raises:
        ConsistencyError: If the constants fail their checks or a witness matches no
            analytic eigenfunction.
        EmptyCandidateSetError: If no candidate survives.
    """
    if constants is None:
        constants = lattice_constants(n_schedule, tolerances=tolerances)
    if not constants.passed:
        raise ConsistencyError(
            "lattice constants failed their checks: "
            f"identities {'pass' if constants.identities_pass else 'fail'}, "
            f"errors {constants.errors}, a = {constants.a:.6f} vs bound {A_LOWER_BOUND:.6f}"
        )
    params = coexistence_parameters(constants)
    operator_schedule = trailing_schedule(grid_n)
    accepted = params.accepted

    def run(candidate: LambdaCandidate) -> CoexistenceRun:
        return _run_candidate(constants, candidate, operator_schedule, probe_schedule, tolerances)

    if jobs > 1 and len(accepted) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as executor:
            runs = tuple(executor.map(run, accepted))
    else:
        runs = tuple(run(candidate) for candidate in accepted)

    notes = [SIGN_CONVENTION_NOTE, CARDINALITY_NOTE]
    if params.candidates_coincide:
        notes.append("the two candidates coincide within error; the cluster may merge")
    return CoexistenceReport(constants, params, runs, tuple(notes))
