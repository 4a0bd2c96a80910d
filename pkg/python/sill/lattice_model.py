"""One-particle hopping data on Z^3 and the dispersion relations it generates.

A hopping map assigns complex amplitudes to finitely many lattice sites. Its
Fourier series ``eps(p) = sum_s eps_hat(s) exp(i (p, s))`` is the dispersion
relation; the same container stores pair interactions ``v_hat`` and the
diagonal potentials used in coordinate space.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property
from types import MappingProxyType
from typing import NamedTuple, TypeAlias

import numpy as np
import numpy.typing as npt
import scipy.linalg
from scipy.stats import qmc

from sill.config import DEFAULT_TOLERANCES, Tolerances
from sill.errors import GridError, ModelValidationError, TruncationWarning

__all__ = [
    "DispersionRelation",
    "GlobalMinimum",
    "HoppingCoefficients",
    "MinimumStatus",
    "SemigroupCheck",
    "Site",
    "apply_coordinate_hamiltonian",
    "cnd_inequality",
    "cnd_inequality_margin",
    "coordinate_matrix",
    "dispersion_eval",
    "dispersion_gradient",
    "dispersion_hessian",
    "find_global_minimum",
    "is_conditionally_negative_definite",
    "quadratic_form_cnd_check",
    "semigroup_positivity_check",
    "standard_laplacian",
    "torus_distance",
    "wrap_to_torus",
]

logger = logging.getLogger(__name__)

Site: TypeAlias = tuple[int, int, int]
FloatArray: TypeAlias = npt.NDArray[np.float64]
ComplexArray: TypeAlias = npt.NDArray[np.complex128]
PointLike: TypeAlias = Sequence[float] | npt.NDArray[np.floating]

_MAX_REFINED_SEEDS = 32
_MAX_TIE_SEEDS = 8


def _as_site(site: Sequence[int] | npt.NDArray[np.integer]) -> Site:
    values = tuple(int(component) for component in site)
    if len(values) != 3:
        raise ModelValidationError(f"lattice sites must have three components, got {values}")
    return (values[0], values[1], values[2])


def _negate(site: Site) -> Site:
    return (-site[0], -site[1], -site[2])


class HoppingCoefficients:
    """Finitely supported map from lattice sites to complex amplitudes.

    The constructor stores what it is given; hermiticity is a property that can be
    measured (:meth:`hermiticity_defect`) and enforced (:meth:`require_hermitian`).
    Zero amplitudes are dropped.

    Example:
        >>> from sill.lattice_model import HoppingCoefficients
        >>> hop = HoppingCoefficients.from_entries({(0, 0, 0): 6, (1, 0, 0): -1})
        >>> hop.entry((-1, 0, 0))
        (-1+0j)
    """

    def __init__(self, entries: Mapping[Site, complex] | None = None) -> None:
        cleaned: dict[Site, complex] = {}
        for site, value in (entries or {}).items():
            amplitude = complex(value)
            if amplitude != 0:
                cleaned[_as_site(site)] = amplitude
        self._entries: Mapping[Site, complex] = MappingProxyType(dict(sorted(cleaned.items())))

    @classmethod
    def from_entries(
        cls,
        entries: Mapping[Site, complex] | Iterable[tuple[Sequence[int], complex]],
        *,
        tolerance: float = DEFAULT_TOLERANCES.hermiticity,
    ) -> HoppingCoefficients:
        """Build a hermitian hopping map, filling in missing conjugate partners.

        Entries given for both ``s`` and ``-s`` are cross-checked; a mismatch larger
        than ``tolerance`` (relative to the largest amplitude) is rejected.

        Raises:
            ModelValidationError: On duplicate sites or inconsistent conjugate pairs.
        """
        items = entries.items() if isinstance(entries, Mapping) else entries
        given: dict[Site, complex] = {}
        for raw_site, value in items:
            site = _as_site(raw_site)
            if site in given:
                raise ModelValidationError(f"duplicate hopping entry for site {site}")
            given[site] = complex(value)

        scale = max((abs(v) for v in given.values()), default=0.0)
        filled = dict(given)
        for site, value in given.items():
            partner = _negate(site)
            if partner in given:
                defect = abs(given[partner] - value.conjugate())
                if defect > tolerance * max(1.0, scale):
                    raise ModelValidationError(
                        f"entries for {site} and {partner} are not complex conjugates "
                        f"({value} vs {given[partner]}, defect {defect:.3e})"
                    )
            else:
                filled[partner] = value.conjugate()
        return cls(filled)

    @classmethod
    def from_arrays(
        cls, sites: npt.NDArray[np.integer], amplitudes: npt.ArrayLike
    ) -> HoppingCoefficients:
        """Build a map from parallel arrays of sites ``(M, 3)`` and amplitudes ``(M,)``."""
        values = np.asarray(amplitudes, dtype=np.complex128)
        pairs = zip(sites, values, strict=True)
        return cls({_as_site(site): complex(value) for site, value in pairs})

    @property
    def entries(self) -> Mapping[Site, complex]:
        return self._entries

    def entry(self, site: Sequence[int]) -> complex:
        """Amplitude at ``site`` (zero outside the support)."""
        return self._entries.get(_as_site(site), 0j)

    def items(self) -> Iterator[tuple[Site, complex]]:
        return iter(self._entries.items())

    def __len__(self) -> int:
        return len(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def __repr__(self) -> str:
        return f"HoppingCoefficients({dict(self._entries)!r})"

    def __add__(self, other: HoppingCoefficients) -> HoppingCoefficients:
        combined = dict(self._entries)
        for site, value in other.items():
            combined[site] = combined.get(site, 0j) + value
        return HoppingCoefficients(combined)

    @cached_property
    def sites(self) -> npt.NDArray[np.int64]:
        """Support sites as an ``(M, 3)`` integer array in sorted order."""
        if not self._entries:
            return np.zeros((0, 3), dtype=np.int64)
        return np.array(list(self._entries), dtype=np.int64)

    @cached_property
    def amplitudes(self) -> ComplexArray:
        return np.array(list(self._entries.values()), dtype=np.complex128)

    @property
    def support_radius(self) -> int:
        """Largest sup-norm of a support site (0 for the empty map)."""
        if not self._entries:
            return 0
        return int(np.abs(self.sites).max())

    @property
    def l1_norm(self) -> float:
        return float(np.abs(self.amplitudes).sum())

    def hermiticity_defect(self) -> float:
        """Largest ``|entry(s) - conj(entry(-s))|`` over the support."""
        return max(
            (abs(value - self.entry(_negate(site)).conjugate()) for site, value in self.items()),
            default=0.0,
        )

    def is_hermitian(self, tolerance: float = DEFAULT_TOLERANCES.hermiticity) -> bool:
        return self.hermiticity_defect() <= tolerance * max(1.0, self.l1_norm)

    def require_hermitian(self, tolerance: float = DEFAULT_TOLERANCES.hermiticity) -> None:
        """Raise if the map does not generate a real dispersion.

        Raises:
            ModelValidationError: If the hermiticity defect exceeds ``tolerance``.
        """
        defect = self.hermiticity_defect()
        if defect > tolerance * max(1.0, self.l1_norm):
            raise ModelValidationError(
                f"hopping is not hermitian: max |e(s) - conj(e(-s))| = {defect:.3e}"
            )

    def is_real(self, tolerance: float = DEFAULT_TOLERANCES.imaginary) -> bool:
        return bool(np.all(np.abs(self.amplitudes.imag) <= tolerance * max(1.0, self.l1_norm)))

    def is_even(self, tolerance: float = DEFAULT_TOLERANCES.hermiticity) -> bool:
        scale = tolerance * max(1.0, self.l1_norm)
        return all(abs(value - self.entry(_negate(site))) <= scale for site, value in self.items())

    def reflected(self) -> HoppingCoefficients:
        """The map ``s -> entry(-s)``."""
        return HoppingCoefficients({_negate(site): value for site, value in self.items()})

    def scaled(self, factor: complex) -> HoppingCoefficients:
        return HoppingCoefficients({site: factor * value for site, value in self.items()})

    def fourier(self, p: PointLike) -> complex | ComplexArray:
        """Evaluate ``sum_s entry(s) exp(i (p, s))`` at one point or an ``(..., 3)`` array."""
        points = np.asarray(p, dtype=np.float64)
        phases = points @ self.sites.T.astype(np.float64)
        values = np.exp(1j * phases) @ self.amplitudes
        if points.ndim == 1:
            return complex(values)
        return np.asarray(values, dtype=np.complex128)


def standard_laplacian(scale: float = 1.0) -> HoppingCoefficients:
    """Nearest-neighbour Laplacian ``2*scale*sum_i (1 - cos p_i)``.

    ``scale=1`` is the standard normalization (band ``[0, 12]``); ``scale=0.5`` gives
    ``sum_i (1 - cos p_i)``.
    """
    entries: dict[Site, complex] = {(0, 0, 0): 6.0 * scale}
    for axis in range(3):
        for sign in (1, -1):
            site = [0, 0, 0]
            site[axis] = sign
            entries[_as_site(site)] = -scale
    return HoppingCoefficients(entries)


def _real_trig(hopping: HoppingCoefficients, points: FloatArray) -> tuple[FloatArray, FloatArray]:
    phases = points @ hopping.sites.T.astype(np.float64)
    cos, sin = np.cos(phases), np.sin(phases)
    re, im = hopping.amplitudes.real, hopping.amplitudes.imag
    return cos @ re - sin @ im, sin @ re + cos @ im


def dispersion_eval(
    hopping: HoppingCoefficients,
    p: PointLike,
    *,
    tolerance: float = DEFAULT_TOLERANCES.imaginary,
) -> float | FloatArray:
    """Evaluate the real dispersion relation of a hermitian hopping map.

    Args:
        hopping: Hermitian hopping coefficients.
        p: A point of the torus or an ``(..., 3)`` array of points.
        tolerance: Relative bound for the discarded imaginary part.

    Returns:
        ``eps(p)`` as a float, or an array of shape ``p.shape[:-1]``.

    Raises:
        ModelValidationError: If the hopping is not hermitian.

    Example:
        >>> import math
        >>> from sill.lattice_model import dispersion_eval, standard_laplacian
        >>> dispersion_eval(standard_laplacian(), (math.pi, math.pi, math.pi))
        12.0
    """
    hopping.require_hermitian()
    points = np.asarray(p, dtype=np.float64)
    real, imag = _real_trig(hopping, points)
    bound = tolerance * max(1.0, hopping.l1_norm)
    worst = float(np.max(np.abs(imag), initial=0.0))
    if worst > bound:
        raise ModelValidationError(f"dispersion has imaginary part {worst:.3e} above {bound:.1e}")
    if points.ndim == 1:
        return float(real)
    return real


def dispersion_gradient(hopping: HoppingCoefficients, p: PointLike) -> FloatArray:
    """Analytic gradient of the real part of the trigonometric sum at one point."""
    point = np.asarray(p, dtype=np.float64)
    phases = hopping.sites @ point
    weights = -(hopping.amplitudes.real * np.sin(phases) + hopping.amplitudes.imag * np.cos(phases))
    return np.asarray(weights @ hopping.sites, dtype=np.float64)


def dispersion_hessian(hopping: HoppingCoefficients, p: PointLike) -> FloatArray:
    """Analytic Hessian of the real part of the trigonometric sum at one point."""
    point = np.asarray(p, dtype=np.float64)
    phases = hopping.sites @ point
    weights = hopping.amplitudes.real * np.cos(phases) - hopping.amplitudes.imag * np.sin(phases)
    sites = hopping.sites.astype(np.float64)
    return np.asarray(-(sites.T * weights) @ sites, dtype=np.float64)


def wrap_to_torus(p: PointLike) -> FloatArray:
    """Map points componentwise into ``(-pi, pi]``."""
    points = np.asarray(p, dtype=np.float64)
    return np.asarray(np.pi - np.mod(np.pi - points, 2.0 * np.pi), dtype=np.float64)


def torus_distance(p: PointLike, q: PointLike) -> float:
    """Euclidean distance between two points of the torus."""
    delta = wrap_to_torus(np.asarray(p, dtype=np.float64) - np.asarray(q, dtype=np.float64))
    return float(np.linalg.norm(delta))


class MinimumStatus(StrEnum):
    """Outcome of the minimum search with respect to threshold classification."""

    OK = "ok"
    DEGENERATE = "degenerate"
    OFF_ORIGIN = "off_origin"
    NOT_UNIQUE = "not_unique"


@dataclass(frozen=True)
class GlobalMinimum:
    """Refined global minimum of a real trigonometric sum."""

    minimizer: FloatArray
    min_value: float
    hessian: FloatArray
    hessian_min_eigenvalue: float
    unique: bool
    degenerate: bool
    at_origin: bool
    local_minima: int

    @property
    def status(self) -> MinimumStatus:
        if self.degenerate:
            return MinimumStatus.DEGENERATE
        if not self.at_origin:
            return MinimumStatus.OFF_ORIGIN
        if not self.unique:
            return MinimumStatus.NOT_UNIQUE
        return MinimumStatus.OK


def _newton_refine(
    hopping: HoppingCoefficients, seed: FloatArray, scale: float, max_iter: int = 60
) -> tuple[FloatArray, float]:
    p = seed.copy()
    value = float(_real_trig(hopping, p)[0])
    floor = 1e-8 * scale
    for _ in range(max_iter):
        gradient = dispersion_gradient(hopping, p)
        if np.linalg.norm(gradient) <= 1e-14 * scale:
            break
        curvature, basis = np.linalg.eigh(dispersion_hessian(hopping, p))
        # Saddle-free Newton: absolute curvatures keep the step a descent direction.
        step = -basis @ ((basis.T @ gradient) / np.maximum(np.abs(curvature), floor))
        t = 1.0
        while t > 1e-12:
            candidate = p + t * step
            candidate_value = float(_real_trig(hopping, candidate)[0])
            if candidate_value <= value:
                break
            t *= 0.5
        else:
            break
        moved = float(np.linalg.norm(candidate - p))
        p, value = candidate, candidate_value
        if moved <= 1e-15:
            break
    return wrap_to_torus(p), value


def find_global_minimum(
    hopping: HoppingCoefficients,
    scan_resolution: int = 32,
    *,
    tolerances: Tolerances = DEFAULT_TOLERANCES,
) -> GlobalMinimum:
    """Locate the global minimum of a real dispersion relation.

    A periodic grid that contains the origin is scanned, every grid local minimum
    that ties with the best grid value (plus the lowest others) is refined by a
    damped Newton iteration with analytic derivatives, and the lowest refined value
    wins. Ties are broken by the lexicographically smallest grid seed.

    Args:
        hopping: Hermitian hopping coefficients.
        scan_resolution: Grid points per axis, at least 8.
        tolerances: Value, position and Hessian gates.

    Returns:
        The refined minimum with its Hessian and uniqueness flag. A degenerate
        Hessian is a status on the result, not an error.

    Raises:
        GridError: If ``scan_resolution`` is below 8.
        ModelValidationError: If the hopping is not hermitian.
    """
    if scan_resolution < 8:
        raise GridError(f"scan_resolution must be >= 8, got {scan_resolution}")
    hopping.require_hermitian(tolerances.hermiticity)

    scale = max(1.0, hopping.l1_norm)
    value_tol = tolerances.minimum_value * scale
    axis = -np.pi + 2.0 * np.pi * np.arange(scan_resolution) / scan_resolution
    mesh = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1)
    values = _real_trig(hopping, mesh.reshape(-1, 3))[0].reshape((scan_resolution,) * 3)

    is_local_min = np.ones(values.shape, dtype=bool)
    for shift in np.ndindex(3, 3, 3):
        offset = tuple(component - 1 for component in shift)
        if offset == (0, 0, 0):
            continue
        neighbour = np.roll(values, offset, axis=(0, 1, 2))
        is_local_min &= values <= neighbour + value_tol
    seeds = np.flatnonzero(is_local_min)
    flat_values = values.reshape(-1)
    best_grid = float(flat_values[seeds].min())

    ties = seeds[flat_values[seeds] <= best_grid + value_tol]
    others = seeds[flat_values[seeds] > best_grid + value_tol]
    others = others[np.argsort(flat_values[others], kind="stable")][:_MAX_REFINED_SEEDS]
    candidates = np.concatenate([ties[:_MAX_TIE_SEEDS], others])
    logger.debug(
        "minimum scan at resolution %d: %d local minima, %d ties, refining %d",
        scan_resolution,
        seeds.size,
        ties.size,
        candidates.size,
    )

    refined = [
        (int(index), *_newton_refine(hopping, mesh.reshape(-1, 3)[index], scale))
        for index in candidates
    ]
    best_value = min(value for _, _, value in refined)
    winners = [entry for entry in refined if entry[2] <= best_value + value_tol]
    winners.sort(key=lambda entry: entry[0])
    _, minimizer, min_value = winners[0]

    distinct: list[FloatArray] = []
    for _, point, _ in winners:
        if all(torus_distance(point, other) > 1e-6 for other in distinct):
            distinct.append(point)
    unique = len(distinct) == 1 and ties.size <= _MAX_TIE_SEEDS

    hessian = dispersion_hessian(hopping, minimizer)
    hessian_min = float(np.linalg.eigvalsh(hessian)[0])
    degenerate = hessian_min < tolerances.degenerate_hessian * scale
    at_origin = torus_distance(minimizer, np.zeros(3)) <= tolerances.origin_position
    if degenerate:
        logger.warning(
            "degenerate minimum at %s: smallest Hessian eigenvalue %.3e",
            np.array2string(minimizer, precision=6),
            hessian_min,
        )
    return GlobalMinimum(
        minimizer=minimizer,
        min_value=min_value,
        hessian=hessian,
        hessian_min_eigenvalue=hessian_min,
        unique=unique,
        degenerate=bool(degenerate),
        at_origin=bool(at_origin),
        local_minima=int(seeds.size),
    )


@dataclass(frozen=True)
class DispersionRelation:
    """A hermitian hopping map together with its located minimum."""

    hopping: HoppingCoefficients
    minimum: GlobalMinimum

    @classmethod
    def from_hopping(
        cls,
        hopping: HoppingCoefficients,
        scan_resolution: int = 32,
        *,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
    ) -> DispersionRelation:
        return cls(hopping, find_global_minimum(hopping, scan_resolution, tolerances=tolerances))

    def __call__(self, p: PointLike) -> float | FloatArray:
        return dispersion_eval(self.hopping, p)

    @property
    def value_at_origin(self) -> float:
        return float(self.hopping.amplitudes.real.sum())

    @property
    def minimizer(self) -> FloatArray:
        return self.minimum.minimizer

    @property
    def min_value(self) -> float:
        return self.minimum.min_value

    @property
    def hessian_at_min(self) -> FloatArray:
        return self.minimum.hessian

    @property
    def threshold_classifiable(self) -> bool:
        """Unique non-degenerate minimum located at the origin."""
        return self.minimum.status is MinimumStatus.OK


def is_conditionally_negative_definite(
    hopping: HoppingCoefficients, tolerance: float = DEFAULT_TOLERANCES.cnd
) -> bool:
    """True iff every off-origin coefficient is real and non-positive.

    For real-valued dispersions this is the Levy-Khinchin form of conditional
    negative definiteness, and equivalently the generalized-Laplacian test.
    """
    for site, value in hopping.items():
        if site == (0, 0, 0):
            continue
        if abs(value.imag) > tolerance or value.real > tolerance:
            return False
    return True


def cnd_inequality(
    hopping: HoppingCoefficients, p: PointLike, q: PointLike
) -> float | FloatArray:
    """``F(p, q) = eps(p) + eps(q) - (eps(p+q) + eps(p-q))/2 - eps(0)``, broadcasting."""
    p_arr = np.asarray(p, dtype=np.float64)
    q_arr = np.asarray(q, dtype=np.float64)
    origin = float(dispersion_eval(hopping, np.zeros(3)))
    value = (
        np.asarray(dispersion_eval(hopping, p_arr))
        + np.asarray(dispersion_eval(hopping, q_arr))
        - 0.5
        * (
            np.asarray(dispersion_eval(hopping, p_arr + q_arr))
            + np.asarray(dispersion_eval(hopping, p_arr - q_arr))
        )
        - origin
    )
    if value.ndim == 0:
        return float(value)
    return np.asarray(value, dtype=np.float64)


def cnd_inequality_margin(
    hopping: HoppingCoefficients,
    q: PointLike,
    sample_count: int = 1000,
    *,
    points: npt.ArrayLike | None = None,
    exclusion_radius: float = 1e-6,
    seed: int = 0,
) -> float:
    """Minimum of :func:`cnd_inequality` over a quasi-random sample of ``p``.

    The sample is a scrambled Sobol sequence on the torus. Sample points lying within
    ``exclusion_radius`` of a hyperplane ``(p, s) = 0 mod 2pi`` for a support site
    ``s`` (the exceptional set where the inequality degenerates to equality) are
    dropped. Explicit ``points`` are always kept.
    """
    sampler = qmc.Sobol(d=3, scramble=True, seed=seed)
    sample = -np.pi + 2.0 * np.pi * sampler.random_base2(max(0, math.ceil(math.log2(sample_count))))
    sample = sample[:sample_count]

    off_origin = np.array([site for site in hopping.entries if site != (0, 0, 0)], dtype=np.float64)
    if off_origin.size:
        phases = sample @ off_origin.T
        residue = np.abs(wrap_to_torus(phases))
        sample = sample[np.all(residue > exclusion_radius, axis=1)]
    if points is not None:
        sample = np.vstack([sample, np.asarray(points, dtype=np.float64).reshape(-1, 3)])
    if sample.size == 0:
        return math.inf
    q_arr = np.broadcast_to(np.asarray(q, dtype=np.float64), sample.shape)
    return float(np.min(cnd_inequality(hopping, sample, q_arr)))


def quadratic_form_cnd_check(
    hopping: HoppingCoefficients,
    trials: int = 200,
    size: int = 6,
    *,
    seed: int = 0,
) -> float:
    """Largest sampled value of ``sum_ij eps(p_i - p_j) z_i conj(z_j)`` over zero-sum ``z``.

    A direct sampled test of the quadratic-form definition of conditional negative
    definiteness; values above roundoff indicate a violation.
    """
    rng = np.random.default_rng(seed)
    worst = -math.inf
    for _ in range(trials):
        nodes = rng.uniform(-np.pi, np.pi, size=(size, 3))
        z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
        z -= z.mean()
        kernel = np.asarray(hopping.fourier(nodes[:, None, :] - nodes[None, :, :]))
        worst = max(worst, float(np.real(z @ kernel @ z.conj())))
    return worst


def _box_index(site: Sequence[int], radius: int) -> tuple[int, int, int] | None:
    index = tuple(int(component) + radius for component in site)
    if all(0 <= component <= 2 * radius for component in index):
        return (index[0], index[1], index[2])
    return None


def _state_array(
    state: Mapping[Site, complex] | npt.ArrayLike, box_radius: int
) -> ComplexArray:
    side = 2 * box_radius + 1
    if isinstance(state, Mapping):
        array = np.zeros((side,) * 3, dtype=np.complex128)
        for site, value in state.items():
            index = _box_index(site, box_radius)
            if index is None:
                raise GridError(f"state site {site} lies outside the box of radius {box_radius}")
            array[index] = value
        return array
    array = np.asarray(state, dtype=np.complex128)
    if array.shape != (side,) * 3:
        raise GridError(f"state must have shape {(side,) * 3}, got {array.shape}")
    return array


def apply_coordinate_hamiltonian(
    hopping: HoppingCoefficients,
    potential: HoppingCoefficients | None,
    state: Mapping[Site, complex] | npt.ArrayLike,
    box_radius: int,
) -> ComplexArray:
    """Apply ``(h psi)(x) = sum_s eps_hat(s) psi(x + s) + v_hat(x) psi(x)`` on a box.

    The state is indexed by ``x + box_radius`` along each axis and treated as zero
    outside the box. A ``TruncationWarning`` is issued when the state is non-zero
    within ``support_radius`` of the boundary.

    Args:
        hopping: Hopping amplitudes ``eps_hat``.
        potential: Diagonal potential ``v_hat(x)``, or ``None``.
        state: A mapping from sites to values, or an array of shape ``(2R+1,)*3``.
        box_radius: Half-width ``R`` of the box.

    Returns:
        Array of shape ``(2R+1, 2R+1, 2R+1)``.
    """
    psi = _state_array(state, box_radius)
    side = psi.shape[0]
    margin = hopping.support_radius
    if margin:
        interior = np.zeros_like(psi, dtype=bool)
        if side > 2 * margin:
            interior[margin:-margin, margin:-margin, margin:-margin] = True
        if np.any(psi[~interior] != 0):
            warnings.warn(
                f"state reaches within {margin} sites of the box boundary; "
                "the result is truncated there",
                TruncationWarning,
                stacklevel=2,
            )

    out = np.zeros_like(psi)
    for site, amplitude in hopping.items():
        if any(abs(component) >= side for component in site):
            continue
        dst = tuple(slice(max(0, -s), side - max(0, s)) for s in site)
        src = tuple(slice(max(0, s), side + min(0, s)) for s in site)
        out[dst] += amplitude * psi[src]
    if potential is not None:
        for site, value in potential.items():
            index = _box_index(site, box_radius)
            if index is not None:
                out[index] += value * psi[index]
    return out


def coordinate_matrix(
    hopping: HoppingCoefficients,
    potential: HoppingCoefficients | None,
    box_radius: int,
) -> ComplexArray:
    """Dense matrix of the truncated coordinate Hamiltonian on the box, row-major sites."""
    side = 2 * box_radius + 1
    grid = np.stack(np.meshgrid(*(np.arange(side),) * 3, indexing="ij"), axis=-1).reshape(-1, 3)
    flat = np.ravel_multi_index(grid.T, (side,) * 3)
    matrix = np.zeros((side**3, side**3), dtype=np.complex128)
    for site, amplitude in hopping.items():
        target = grid + np.asarray(site)
        inside = np.all((target >= 0) & (target < side), axis=1)
        columns = np.ravel_multi_index(target[inside].T, (side,) * 3)
        matrix[flat[inside], columns] += amplitude
    if potential is not None:
        for site, value in potential.items():
            index = _box_index(site, box_radius)
            if index is not None:
                position = int(np.ravel_multi_index(index, (side,) * 3))
                matrix[position, position] += value
    return matrix


class SemigroupCheck(NamedTuple):
    """Result of :func:`semigroup_positivity_check`."""

    positive: bool
    min_entry: float


def semigroup_positivity_check(
    hopping: HoppingCoefficients,
    potential: HoppingCoefficients | None,
    box_radius: int,
    t: float,
    *,
    tolerance: float = DEFAULT_TOLERANCES.positivity,
) -> SemigroupCheck:
    """Check entrywise non-negativity of ``exp(-t h)`` for the truncated box Hamiltonian.

    Raises:
        ModelValidationError: If ``t <= 0``.
        GridError: If the box is smaller than twice the hopping range.
    """
    if t <= 0:
        raise ModelValidationError(f"t must be positive, got {t}")
    if box_radius < 2 * hopping.support_radius:
        raise GridError(
            f"box_radius must be >= 2*support_radius = {2 * hopping.support_radius}, "
            f"got {box_radius}"
        )
    matrix = coordinate_matrix(hopping, potential, box_radius)
    if np.abs(matrix.imag).max(initial=0.0) == 0.0:
        semigroup = scipy.linalg.expm(-t * matrix.real)
        imaginary = 0.0
    else:
        semigroup = scipy.linalg.expm(-t * matrix)
        imaginary = float(np.abs(semigroup.imag).max())
        semigroup = semigroup.real
    min_entry = float(semigroup.min())
    positive = min_entry >= -tolerance and imaginary <= tolerance
    logger.debug("semigroup at t=%g on box radius %d: min entry %.3e", t, box_radius, min_entry)
    return SemigroupCheck(positive=positive, min_entry=min_entry)
