"""sill - threshold spectra of lattice Schroedinger operators.

Numerics for one- and two-particle Schroedinger operators on the cubic lattice
``Z^3`` in momentum space: dispersion relations and their minima, the
Birman-Schwinger operator at the threshold, the classification of the threshold
into cases I-V (regular point, virtual level, threshold eigenvalue, both,
excluded), two-particle fibers ``h(k)`` with their discrete spectrum below the
band, and an explicit model where a virtual level and a threshold eigenvalue
coexist.

Thread Safety:
    Models, grids and reports are immutable and can be shared between threads.
    Grids are cached per resolution (:func:`sill.torus_grid.make_grid`); the cache
    is guarded by :func:`functools.lru_cache`. Eigensolves release the GIL, which
    is what :func:`sill.two_particle.fiber_scan` relies on when ``jobs > 1``.

Example:
    >>> from sill import OneParticleModel, classify_threshold, standard_laplacian
    >>> from sill import HoppingCoefficients
    >>> model = OneParticleModel.from_hoppings(standard_laplacian(), HoppingCoefficients())
    >>> classify_threshold(model, (4, 8)).case.value
    'I'

    >>> from sill.coexistence import lattice_constants
    >>> constants = lattice_constants((32, 64))
    >>> round(constants.a - constants.c, 6)
    0.166667
"""

from sill.birman_schwinger import (
    OneParticleModel,
    ThresholdCase,
    ThresholdReport,
    build_bs,
    classify_threshold,
    extend_eigenfunction,
    l2_membership_probe,
)
from sill.coexistence import (
    coexistence_parameters,
    coexistence_report,
    invariant_subspace_matrices,
    lattice_constants,
    zd_potential,
)
from sill.config import DEFAULT_TOLERANCES, RunConfig, Tolerances
from sill.errors import (
    ConsistencyError,
    EmptyCandidateSetError,
    EvaluationError,
    GridError,
    HypothesisViolation,
    ModelValidationError,
    NumericalError,
    SillError,
    SpectralParameterError,
    TruncationWarning,
)
from sill.io import load_model
from sill.lattice_model import (
    DispersionRelation,
    HoppingCoefficients,
    dispersion_eval,
    find_global_minimum,
    is_conditionally_negative_definite,
    semigroup_positivity_check,
    standard_laplacian,
)
from sill.torus_grid import (
    TorusGrid,
    convolution_matrix,
    integrate_refined,
    make_grid,
)
from sill.two_particle import (
    TwoParticleModel,
    band_edges,
    bound_state_count_check,
    fiber_scan,
    fiber_scan_async,
    fiber_spectrum,
    gamma_witness,
    gap_profile,
    two_particle_dispersion,
)

__all__ = [
    "DEFAULT_TOLERANCES",
    "ConsistencyError",
    "DispersionRelation",
    "EmptyCandidateSetError",
    "EvaluationError",
    "GridError",
    "HoppingCoefficients",
    "HypothesisViolation",
    "ModelValidationError",
    "NumericalError",
    "OneParticleModel",
    "RunConfig",
    "SillError",
    "SpectralParameterError",
    "ThresholdCase",
    "ThresholdReport",
    "Tolerances",
    "TorusGrid",
    "TruncationWarning",
    "TwoParticleModel",
    "band_edges",
    "bound_state_count_check",
    "build_bs",
    "classify_threshold",
    "coexistence_parameters",
    "coexistence_report",
    "convolution_matrix",
    "dispersion_eval",
    "extend_eigenfunction",
    "fiber_scan",
    "fiber_scan_async",
    "fiber_spectrum",
    "find_global_minimum",
    "gamma_witness",
    "gap_profile",
    "integrate_refined",
    "invariant_subspace_matrices",
    "is_conditionally_negative_definite",
    "l2_membership_probe",
    "lattice_constants",
    "load_model",
    "make_grid",
    "semigroup_positivity_check",
    "standard_laplacian",
    "two_particle_dispersion",
    "zd_potential",
]

__version__ = "0.1.0"
