"""Two-particle fibers ``h(k)`` over the quasi-momentum torus.

With one-particle dispersions ``eps_1``, ``eps_2`` and a pair interaction ``v``
the fiber at quasi-momentum ``k`` acts as ``E_k(p) f(p) + (v * f)(p)`` with
``E_k(p) = eps_1(p) + eps_2(k - p)``. Its essential spectrum is the band
``[E_min(k), E_max(k)]``; eigenvalues below ``E_min(k)`` form the discrete
spectrum scanned here.
"""

from __future__ import annotations

import asyncio
import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TypeAlias

import numpy as np
import numpy.typing as npt

from sill._linalg import Matrix, eigh_checked
from sill.birman_schwinger import (
    OneParticleModel,
    ThresholdCase,
    ThresholdReport,
    classify_threshold,
    evenize,
)
from sill.config import DEFAULT_TOLERANCES, Tolerances, trailing_schedule
from sill.errors import (
    ConsistencyError,
    GridError,
    HypothesisViolation,
    ModelValidationError,
    SillError,
)
from sill.lattice_model import (
    DispersionRelation,
    HoppingCoefficients,
    dispersion_eval,
    find_global_minimum,
    is_conditionally_negative_definite,
    wrap_to_torus,
)
from sill.torus_grid import TorusGrid, convolution_matrix, make_grid

__all__ = [
    "BandEdges",
    "CountEntry",
    "FiberSpectrum",
    "GammaWitness",
    "GapEntry",
    "ScanRow",
    "TwoParticleModel",
    "WitnessMode",
    "ZeroFiberAnalysis",
    "analyze_zero_fiber",
    "band_edges",
    "bound_state_count_check",
    "build_fiber",
    "fiber_scan",
    "fiber_scan_async",
    "fiber_spectrum",
    "gamma_witness",
    "gap_profile",
    "lemma_inequality",
    "resolution_margin",
    "two_particle_dispersion",
]

logger = logging.getLogger(__name__)

FloatArray: TypeAlias = npt.NDArray[np.float64]
Point: TypeAlias = tuple[float, float, float]
PointLike: TypeAlias = Sequence[float] | FloatArray

DEGENERATE_BAND_NOTE = (
    "band degenerates to the single point {value:.12g}; the discrete spectrum may be "
    "infinite, eigenvalues off that point are counted on both sides"
)


def _as_point(k: PointLike) -> Point:
    values = np.asarray(k, dtype=np.float64).reshape(3)
    return (float(values[0]), float(values[1]), float(values[2]))


def _is_origin(k: PointLike) -> bool:
    return bool(np.all(wrap_to_torus(np.asarray(k, dtype=np.float64)) == 0.0))


@dataclass(frozen=True)
class TwoParticleModel:
    """Two one-particle dispersions and a real pair interaction ``v_hat``."""

    dispersion_1: DispersionRelation
    dispersion_2: DispersionRelation
    interaction: HoppingCoefficients

    def __post_init__(self) -> None:
        self.dispersion_1.hopping.require_hermitian()
        self.dispersion_2.hopping.require_hermitian()
        if not self.interaction.is_real():
            raise ModelValidationError(
                "pair interaction coefficients must be real so that v(p) = conj(v(-p))"
            )

    @classmethod
    def from_hoppings(
        cls,
        hopping_1: HoppingCoefficients,
        hopping_2: HoppingCoefficients,
        interaction: HoppingCoefficients,
        *,
        scan_resolution: int = 32,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> TwoParticleModel:
        return cls(
            DispersionRelation.from_hopping(hopping_1, scan_resolution, tolerances=tolerances),
            DispersionRelation.from_hopping(hopping_2, scan_resolution, tolerances=tolerances),
            interaction,
        )

    def fiber_hopping(self, k: PointLike) -> HoppingCoefficients:
        """``E_k`` as a trigonometric sum in ``p``: ``eps_1_hat(s) + eps_2_hat(-s) e^{-i(k,s)}``."""
        kk = np.asarray(k, dtype=np.float64)
        entries = dict(self.dispersion_1.hopping.entries)
        for site, value in self.dispersion_2.hopping.items():
            partner = (-site[0], -site[1], -site[2])
            phase = complex(np.exp(-1j * float(np.dot(kk, partner))))
            entries[partner] = entries.get(partner, 0j) + value * phase
        return HoppingCoefficients(entries)

    @property
    def satisfies_cnd_hypothesis(self) -> bool:
        return is_conditionally_negative_definite(
            self.dispersion_1.hopping
        ) and is_conditionally_negative_definite(self.dispersion_2.hopping)

    def zero_fiber_model(
        self, *, scan_resolution: int = 32, tolerances: Tolerances = DEFAULT_TOLERANCES
    ) -> OneParticleModel:
        """``h(0)`` as a one-particle model with dispersion ``E_0``."""
        return OneParticleModel.from_hoppings(
            self.fiber_hopping(np.zeros(3)),
            self.interaction,
            scan_resolution=scan_resolution,
            tolerances=tolerances,
        )


def two_particle_dispersion(
    model: TwoParticleModel, k: PointLike, p: PointLike
) -> float | FloatArray:
    """``E_k(p) = eps_1(p) + eps_2(k - p)`` at one point or an ``(..., 3)`` array."""
    points = np.asarray(p, dtype=np.float64)
    kk = np.asarray(k, dtype=np.float64)
    first = np.asarray(dispersion_eval(model.dispersion_1.hopping, points))
    second = np.asarray(dispersion_eval(model.dispersion_2.hopping, kk - points))
    total = first + second
    if total.ndim == 0:
        return float(total)
    return np.asarray(total, dtype=np.float64)


def lemma_inequality(
    model: TwoParticleModel, p: PointLike, q: PointLike, k: PointLike
) -> float | FloatArray:
    """``E_0(p) - E_0(0) + E_k(q) - (E_k(q + p) + E_k(q - p)) / 2``, broadcasting."""
    pp = np.asarray(p, dtype=np.float64)
    qq = np.asarray(q, dtype=np.float64)
    zero = np.zeros(3)
    value = (
        np.asarray(two_particle_dispersion(model, zero, pp))
        - float(two_particle_dispersion(model, zero, zero))
        + np.asarray(two_particle_dispersion(model, k, qq))
        - 0.5
        * (
            np.asarray(two_particle_dispersion(model, k, qq + pp))
            + np.asarray(two_particle_dispersion(model, k, qq - pp))
        )
    )
    if value.ndim == 0:
        return float(value)
    return np.asarray(value, dtype=np.float64)


@dataclass(frozen=True)
class BandEdges:
    """Edges of the essential spectrum of ``h(k)`` and the minimizer ``p(k)``."""

    e_min: float
    e_max: float
    minimizer: FloatArray
    degenerate: bool

    @property
    def bandwidth(self) -> float:
        return self.e_max - self.e_min


def band_edges(
    model: TwoParticleModel,
    k: PointLike,
    scan_resolution: int = 32,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> BandEdges:
    """Minimum and maximum of ``E_k`` by grid scan and Newton refinement.

    Ties among minimizers are broken by the lexicographically smallest grid seed.

    Raises:
        GridError: If ``scan_resolution`` is below 16.
    """
    if scan_resolution < 16:
        raise GridError(f"scan_resolution must be >= 16 for band edges, got {scan_resolution}")
    hopping = model.fiber_hopping(k)
    lower = find_global_minimum(hopping, scan_resolution, tolerances=tolerances)
    upper = find_global_minimum(hopping.scaled(-1.0), scan_resolution, tolerances=tolerances)
    e_min, e_max = lower.min_value, -upper.min_value
    e_max = max(e_max, e_min)
    return BandEdges(
        e_min=e_min,
        e_max=e_max,
        minimizer=lower.minimizer,
        degenerate=e_max - e_min < tolerances.band_degeneracy,
    )


def build_fiber(model: TwoParticleModel, k: PointLike, grid: TorusGrid) -> Matrix:
    """Matrix of ``h(k)``: ``diag(E_k(p_j))`` plus the symmetrized convolution by ``v``."""
    energies = np.asarray(dispersion_eval(model.fiber_hopping(k), grid.nodes))
    matrix = convolution_matrix(model.interaction, grid, symmetrized=True)
    matrix[np.diag_indices_from(matrix)] += energies
    return matrix


@dataclass(frozen=True)
class FiberSpectrum:
    """Discrete spectrum of ``h(k)`` below (and, for degenerate bands, above) the band."""

    k: Point
    e_min: float
    e_max: float
    minimizer_pk: FloatArray
    eigenvalues_below: tuple[float, ...]
    m_k: float
    gap: float
    bandwidth: float
    margin: float
    degenerate: bool
    eigenvalues_above: tuple[float, ...] = ()
    unresolved: tuple[float, ...] = ()
    notes: tuple[str, ...] = ()

    @property
    def n_below(self) -> int:
        return len(self.eigenvalues_below)

    @property
    def n_discrete(self) -> int:
        """Eigenvalues off the essential spectrum, both sides for a degenerate band."""
        return len(self.eigenvalues_below) + len(self.eigenvalues_above)


def _sub_band(matrix: Matrix, upper: float) -> FloatArray:
    values, _ = eigh_checked(matrix, subset_by_value=(-np.inf, upper), eigvals_only=True)
    return np.sort(values)


def resolution_margin(
    fine: FloatArray, coarse: FloatArray, floor: float
) -> tuple[float, tuple[float, ...]]:
    """Reporting margin from two resolutions, and the eigenvalues only the finer one has.

    Eigenvalues below the band are matched from the bottom; the drift of the
    shallowest matched pair (at least ``floor``) is the margin. Eigenvalues beyond
    the matched ones are returned separately as unresolved.

    Example:
        >>> import numpy as np
        >>> fine, coarse = np.array([-8.0, -0.05]), np.array([-7.99])
        >>> margin, unresolved = resolution_margin(fine, coarse, 1e-8)
        >>> round(margin, 6), unresolved
        (0.01, (-0.05,))
    """
    fine = np.sort(fine)
    coarse = np.sort(coarse)
    margin = floor
    matched = min(fine.size, coarse.size)
    if matched:
        margin = max(margin, abs(float(fine[matched - 1] - coarse[matched - 1])))
    return margin, tuple(float(value) for value in fine[matched:])


def fiber_spectrum(
    model: TwoParticleModel,
    k: PointLike,
    grid: TorusGrid,
    margin: float | None = None,
    *,
    scan_resolution: int = 32,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> FiberSpectrum:
    """Eigenvalues of the discretized fiber below ``E_min(k) - margin``.

    Args:
        model: Two-particle model.
        k: Quasi-momentum.
        grid: Operator grid.
        margin: Reporting margin; by default the drift of the spectrum against the
            grid with ``N - 4`` points per axis, at least ``tolerances.margin_floor``.
        scan_resolution: Resolution of the band-edge search.
        tolerances: Numeric gates.

    Raises:
        NumericalError: If the eigensolver fails.
    """
    point = _as_point(k)
    edges = band_edges(model, point, scan_resolution, tolerances=tolerances)
    matrix = build_fiber(model, point, grid)

    notes: list[str] = []
    if edges.degenerate:
        values, _ = eigh_checked(matrix, eigvals_only=True)
        notes.append(DEGENERATE_BAND_NOTE.format(value=edges.e_min))
    else:
        values = _sub_band(matrix, edges.e_min)

    unresolved: tuple[float, ...] = ()
    if margin is None:
        coarse_n = grid.n_per_axis - 4
        below = values[values < edges.e_min]
        if coarse_n >= 4:
            coarse = _sub_band(build_fiber(model, point, make_grid(coarse_n)), edges.e_min)
            margin, unresolved = resolution_margin(below, coarse, tolerances.margin_floor)
        else:
            margin = tolerances.margin_floor

    below_values = tuple(float(v) for v in np.sort(values[values < edges.e_min - margin]))
    unresolved = tuple(v for v in unresolved if v < edges.e_min - margin)
    if unresolved:
        notes.append(
            f"{len(unresolved)} eigenvalue(s) below the band appear only at "
            f"N={grid.n_per_axis}; counted, but not converged"
        )
        logger.warning("fiber k=%s: unresolved eigenvalues %s", point, unresolved)
    above_values: tuple[float, ...] = ()
    if edges.degenerate:
        above_values = tuple(float(v) for v in np.sort(values[values > edges.e_max + margin]))
    lowest = float(values.min()) if values.size else math.inf
    m_k = min(edges.e_min, lowest)
    logger.debug(
        "fiber k=%s: band [%.6g, %.6g], %d below (margin %.3g)",
        point,
        edges.e_min,
        edges.e_max,
        len(below_values),
        margin,
    )
    return FiberSpectrum(
        k=point,
        e_min=edges.e_min,
        e_max=edges.e_max,
        minimizer_pk=edges.minimizer,
        eigenvalues_below=below_values,
        m_k=m_k,
        gap=edges.e_min - m_k,
        bandwidth=edges.bandwidth,
        margin=margin,
        degenerate=edges.degenerate,
        eigenvalues_above=above_values,
        unresolved=unresolved,
        notes=tuple(notes),
    )


class WitnessMode(StrEnum):
    EIGENFUNCTION = "eigenfunction"
    VIRTUAL_LEVEL = "virtual_level"


@dataclass(frozen=True)
class ZeroFiberAnalysis:
    """What ``h(0)`` offers: a bound state, a threshold eigenfunction or a virtual level."""

    grid: TorusGrid
    spectrum: FiberSpectrum
    report: ThresholdReport | None
    mode: WitnessMode | None
    density: FloatArray | None = field(default=None, repr=False)

    @property
    def has_bound_state(self) -> bool:
        return self.spectrum.n_below > 0

    @property
    def kernel_dimension(self) -> int:
        """Estimated ``dim Ker(h(0) - E_min(0))``."""
        return self.report.threshold_kernel_dimension if self.report is not None else 0

    @property
    def theorem_applicable(self) -> bool:
        """``h(0)`` has a bound state or a threshold phenomenon (cases II-V)."""
        if self.has_bound_state:
            return True
        return self.report is not None and self.report.case is not ThresholdCase.I


def analyze_zero_fiber(
    model: TwoParticleModel,
    grid: TorusGrid,
    *,
    margin: float | None = None,
    classify: bool = False,
    probe_schedule: Sequence[int] = (32, 64, 128),
    scan_resolution: int = 32,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> ZeroFiberAnalysis:
    """Inspect ``h(0)`` and build the test density ``|f|^2`` used by :func:`gamma_witness`.

    With a bound state, ``f`` is the evenized ground state of the discretized ``h(0)``
    normalized in ``L^2``. Otherwise ``h(0)`` is classified at its threshold; a
    virtual level gives ``f = psi / (E_0 - E_0(0))`` and a threshold eigenvalue gives
    the same expression for its (square-integrable) eigenfunction. The threshold
    classification is always run when ``classify`` is set.
    """
    zero = np.zeros(3)
    spectrum = fiber_spectrum(
        model, zero, grid, margin, scan_resolution=scan_resolution, tolerances=tolerances
    )
    report: ThresholdReport | None = None
    if classify or spectrum.n_below == 0:
        try:
            report = classify_threshold(
                model.zero_fiber_model(scan_resolution=scan_resolution, tolerances=tolerances),
                trailing_schedule(grid.n_per_axis),
                probe_schedule=probe_schedule,
                tolerances=tolerances,
            )
        except SillError as exc:
            logger.warning("threshold classification of h(0) failed: %s", exc)

    weights = grid.weight
    if spectrum.n_below > 0:
        _, vectors = eigh_checked(build_fiber(model, zero, grid), subset_by_index=(0, 0))
        assert vectors is not None  # nosec B101 - requested with vectors
        ground = vectors[:, 0]
        if model.fiber_hopping(zero).is_real():
            ground = evenize(ground, grid)
        density = np.abs(ground) ** 2
        density /= weights * density.sum()
        return ZeroFiberAnalysis(grid, spectrum, report, WitnessMode.EIGENFUNCTION, density)

    if report is None or report.case is ThresholdCase.I or not report.witnesses:
        return ZeroFiberAnalysis(grid, spectrum, report, None, None)

    virtual = report.virtual_witness
    witness = virtual if virtual is not None else report.witnesses[0]
    mode = WitnessMode.VIRTUAL_LEVEL if virtual is not None else WitnessMode.EIGENFUNCTION
    psi = np.asarray(witness.polynomial.fourier(grid.nodes))
    energy = np.asarray(two_particle_dispersion(model, zero, grid.nodes))
    density = np.abs(psi) ** 2 / (energy - spectrum.e_min) ** 2
    density /= weights * density.sum()
    return ZeroFiberAnalysis(grid, spectrum, report, mode, density)


@dataclass(frozen=True)
class GammaWitness:
    """Variational witness ``Gamma(k) = -int F(k, p) |f(p)|^2 dp``."""

    k: Point
    gamma_value: float
    gamma_direct: float
    integrand_min: float
    mode: WitnessMode
    hypothesis_violation: bool


def gamma_witness(
    model: TwoParticleModel,
    k: PointLike,
    zero_fiber: ZeroFiberAnalysis,
    *,
    scan_resolution: int = 32,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> GammaWitness:
    """Evaluate ``Gamma(k)`` in its direct shifted form and its symmetric ``F`` form.

    ``F(k, p) = E_0(p) - E_min(0) + E_min(k) - (E_k(p + p(k)) + E_k(p(k) - p)) / 2``.
    Both forms agree for even ``|f|``; a disagreement beyond roundoff raises.

    Raises:
        HypothesisViolation: If ``h(0)`` provides no test function.
        ConsistencyError: If the two forms disagree.
    """
    if zero_fiber.mode is None or zero_fiber.density is None:
        raise HypothesisViolation(
            "h(0) has neither a bound state nor a threshold eigenfunction or virtual level"
        )
    point = _as_point(k)
    nodes = zero_fiber.grid.nodes
    density = zero_fiber.density
    weight = zero_fiber.grid.weight

    zero_edge = zero_fiber.spectrum.e_min
    edges = band_edges(model, point, scan_resolution, tolerances=tolerances)
    shift = edges.minimizer
    e0 = np.asarray(two_particle_dispersion(model, np.zeros(3), nodes))
    forward = np.asarray(two_particle_dispersion(model, point, nodes + shift))
    backward = np.asarray(two_particle_dispersion(model, point, shift - nodes))

    direct_integrand = e0 - zero_edge - forward + edges.e_min
    symmetric_integrand = e0 - zero_edge + edges.e_min - 0.5 * (forward + backward)
    gamma_direct = -weight * float(np.dot(direct_integrand, density))
    gamma_value = -weight * float(np.dot(symmetric_integrand, density))

    scale = weight * float(np.dot(np.abs(e0) + np.abs(forward) + abs(edges.e_min), density))
    if abs(gamma_direct - gamma_value) > 1e-9 * max(1.0, scale):
        raise ConsistencyError(
            f"direct and symmetric Gamma({point}) disagree: {gamma_direct} vs {gamma_value}"
        )

    violation = (not _is_origin(point)) and gamma_value >= 0.0
    if violation:
        logger.warning(
            "Gamma(%s) = %.6g is not negative; the hypotheses of the gap estimate fail here",
            point,
            gamma_value,
        )
    return GammaWitness(
        k=point,
        gamma_value=gamma_value,
        gamma_direct=gamma_direct,
        integrand_min=float(symmetric_integrand.min()),
        mode=zero_fiber.mode,
        hypothesis_violation=violation,
    )


@dataclass(frozen=True)
class GapEntry:
    k: Point
    gap: float
    inequality_holds: bool | None
    margin: float


def gap_profile(
    model: TwoParticleModel,
    k_list: Sequence[PointLike],
    grid: TorusGrid,
    margin: float | None = None,
    *,
    scan_resolution: int = 32,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list[GapEntry]:
    """Check ``E_min(0) - m(0) < E_min(k) - m(k)`` along ``k_list``.

    The ``k = 0`` entry reports ``inequality_holds = None``.

    Raises:
        HypothesisViolation: If a dispersion is not conditionally negative definite,
            or ``h(0)`` has neither a bound state nor a threshold eigenvalue.
    """
    if not model.satisfies_cnd_hypothesis:
        raise HypothesisViolation(
            "gap profile requires conditionally negative definite one-particle dispersions"
        )
    zero = fiber_spectrum(
        model, np.zeros(3), grid, margin, scan_resolution=scan_resolution, tolerances=tolerances
    )
    if zero.n_below == 0:
        report = classify_threshold(
            model.zero_fiber_model(scan_resolution=scan_resolution, tolerances=tolerances),
            trailing_schedule(grid.n_per_axis),
            tolerances=tolerances,
        )
        if report.threshold_kernel_dimension == 0:
            raise HypothesisViolation(
                "h(0) has no eigenvalue below its threshold and no threshold eigenvalue "
                f"(threshold case {report.case.value}); the gap inequality does not apply"
            )

    entries = []
    for k in k_list:
        if _is_origin(k):
            entries.append(GapEntry(_as_point(k), zero.gap, None, zero.margin))
            continue
        spectrum = fiber_spectrum(
            model, k, grid, margin, scan_resolution=scan_resolution, tolerances=tolerances
        )
        holds = spectrum.gap > zero.gap + spectrum.margin
        entries.append(GapEntry(spectrum.k, spectrum.gap, holds, spectrum.margin))
    return entries


@dataclass(frozen=True)
class CountEntry:
    k: Point
    count: int
    d: int
    satisfied: bool | None


def bound_state_count_check(
    model: TwoParticleModel,
    k_list: Sequence[PointLike],
    grid: TorusGrid,
    *,
    zero_fiber: ZeroFiberAnalysis | None = None,
    margin: float | None = None,
    scan_resolution: int = 32,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list[CountEntry]:
    """Check ``#{eigenvalues of h(k) below E_min(k)} >= max(1, d)`` for ``k != 0``.

    ``d`` is the number of threshold-eigenvalue witnesses of ``h(0)`` (vanishing at
    the origin with convergent probes). Entries are not applicable (``None``) at
    ``k = 0`` and when ``h(0)`` has neither a bound state nor a threshold phenomenon.
    """
    if zero_fiber is None or zero_fiber.report is None:
        zero_fiber = analyze_zero_fiber(
            model,
            grid,
            margin=margin,
            classify=True,
            scan_resolution=scan_resolution,
            tolerances=tolerances,
        )
    d = zero_fiber.kernel_dimension
    applicable = zero_fiber.theorem_applicable
    entries = []
    for k in k_list:
        spectrum = fiber_spectrum(
            model, k, grid, margin, scan_resolution=scan_resolution, tolerances=tolerances
        )
        satisfied: bool | None = None
        if applicable and not _is_origin(k):
            satisfied = spectrum.n_discrete >= max(1, d)
        entries.append(CountEntry(spectrum.k, spectrum.n_discrete, d, satisfied))
    return entries


@dataclass(frozen=True)
class ScanRow:
    """One quasi-momentum of a fiber scan; ``error`` is set for failed rows."""

    k: Point
    e_min: float = math.nan
    e_max: float = math.nan
    p_k: Point = (math.nan, math.nan, math.nan)
    m_k: float = math.nan
    gap: float = math.nan
    n_below: int = 0
    gamma: float = math.nan
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _scan_one(
    model: TwoParticleModel,
    k: Point,
    grid: TorusGrid,
    margin: float | None,
    zero_fiber: ZeroFiberAnalysis | None,
    scan_resolution: int,
    tolerances: Tolerances,
) -> ScanRow:
    try:
        spectrum = fiber_spectrum(
            model, k, grid, margin, scan_resolution=scan_resolution, tolerances=tolerances
        )
        gamma = math.nan
        if zero_fiber is not None and zero_fiber.mode is not None:
            gamma = gamma_witness(
                model, k, zero_fiber, scan_resolution=scan_resolution, tolerances=tolerances
            ).gamma_value
    except SillError as exc:
        logger.error("fiber scan failed at k=%s: %s", k, exc)
        return ScanRow(k=k, error=str(exc))
    logger.info("fiber k=%s: %d eigenvalue(s) below the band", k, spectrum.n_discrete)
    return ScanRow(
        k=k,
        e_min=spectrum.e_min,
        e_max=spectrum.e_max,
        p_k=_as_point(spectrum.minimizer_pk),
        m_k=spectrum.m_k,
        gap=spectrum.gap,
        n_below=spectrum.n_discrete,
        gamma=gamma,
    )


def _prepare_scan(
    model: TwoParticleModel,
    grid: TorusGrid,
    margin: float | None,
    scan_resolution: int,
    tolerances: Tolerances,
) -> ZeroFiberAnalysis | None:
    try:
        return analyze_zero_fiber(
            model, grid, margin=margin, scan_resolution=scan_resolution, tolerances=tolerances
        )
    except SillError as exc:
        logger.warning("no test function from h(0), gamma column left empty: %s", exc)
        return None


def fiber_scan(
    model: TwoParticleModel,
    k_list: Sequence[PointLike],
    grid: TorusGrid,
    *,
    margin: float | None = None,
    jobs: int = 1,
    scan_resolution: int = 32,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list[ScanRow]:
    """Fiber spectra and ``Gamma(k)`` for every ``k``, rows in input order.

    Each ``k`` owns its matrix and eigensolve; ``jobs > 1`` runs them on a thread
    pool (LAPACK releases the GIL). A failing ``k`` yields a row with ``error`` set
    and the scan continues.
    """
    points = [_as_point(k) for k in k_list]
    zero_fiber = _prepare_scan(model, grid, margin, scan_resolution, tolerances)

    def run(k: Point) -> ScanRow:
        return _scan_one(model, k, grid, margin, zero_fiber, scan_resolution, tolerances)

    if jobs <= 1:
        return [run(k) for k in points]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(run, points))


async def fiber_scan_async(
    model: TwoParticleModel,
    k_list: Sequence[PointLike],
    grid: TorusGrid,
    *,
    margin: float | None = None,
    jobs: int = 1,
    scan_resolution: int = 32,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> list[ScanRow]:
    """Asynchronous :func:`fiber_scan` that keeps the event loop responsive.

    Every ``k`` is dispatched to a worker thread; rows come back in input order.

    Example:
        >>> import asyncio
        >>> from sill.two_particle import fiber_scan_async
        >>> async def main(model, grid):
        ...     rows = await fiber_scan_async(model, [(0.0, 0.0, 0.0)], grid, jobs=2)
        ...     return len(rows)
    """
    points = [_as_point(k) for k in k_list]
    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        zero_fiber = await loop.run_in_executor(
            executor, _prepare_scan, model, grid, margin, scan_resolution, tolerances
        )
        futures = [
            loop.run_in_executor(
                executor,
                _scan_one,
                model,
                k,
                grid,
                margin,
                zero_fiber,
                scan_resolution,
                tolerances,
            )
            for k in points
        ]
        return list(await asyncio.gather(*futures))
