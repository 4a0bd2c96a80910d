"""Tests for hopping coefficients, dispersion relations and coordinate Hamiltonians."""

import math

import numpy as np
import pytest

from sill.errors import GridError, ModelValidationError, TruncationWarning
from sill.lattice_model import (
    DispersionRelation,
    HoppingCoefficients,
    MinimumStatus,
    apply_coordinate_hamiltonian,
    cnd_inequality,
    cnd_inequality_margin,
    coordinate_matrix,
    dispersion_eval,
    dispersion_gradient,
    dispersion_hessian,
    find_global_minimum,
    is_conditionally_negative_definite,
    quadratic_form_cnd_check,
    semigroup_positivity_check,
    standard_laplacian,
    torus_distance,
    wrap_to_torus,
)


def _quartic_hopping() -> HoppingCoefficients:
    """(1 - cos p1)^2 + 2(1 - cos p2) + 2(1 - cos p3): flat along p1 at the origin."""
    return HoppingCoefficients.from_entries(
        {
            (0, 0, 0): 1.5 + 4.0,
            (1, 0, 0): -1.0,
            (2, 0, 0): 0.25,
            (0, 1, 0): -1.0,
            (0, 0, 1): -1.0,
        }
    )


class TestHoppingCoefficients:
    """Tests for construction and validation of hopping maps."""

    def test_missing_partner_is_filled(self) -> None:
        """A missing -s entry is the conjugate of the s entry."""
        hop = HoppingCoefficients.from_entries({(0, 0, 0): 6, (1, 0, 0): -1 + 0.5j})
        assert hop.entry((-1, 0, 0)) == -1 - 0.5j

    def test_inconsistent_partner_rejected(self) -> None:
        """Entries for s and -s that are not conjugate are rejected."""
        with pytest.raises(ModelValidationError, match="not complex conjugates"):
            HoppingCoefficients.from_entries({(1, 0, 0): -1.0, (-1, 0, 0): -2.0})

    def test_duplicate_site_rejected(self) -> None:
        """The same site may appear only once."""
        with pytest.raises(ModelValidationError, match="duplicate"):
            HoppingCoefficients.from_entries([((1, 0, 0), -1.0), ((1, 0, 0), -1.0)])

    def test_zero_amplitudes_dropped(self) -> None:
        """Zero amplitudes are not part of the support."""
        hop = HoppingCoefficients({(0, 0, 0): 0.0, (1, 0, 0): 2.0})
        assert len(hop) == 1
        assert hop.support_radius == 1

    def test_empty_map(self) -> None:
        """The empty map has no support and evaluates to zero."""
        hop = HoppingCoefficients()
        assert not hop
        assert hop.support_radius == 0
        assert hop.fourier(np.zeros(3)) == 0

    def test_non_hermitian_detected(self) -> None:
        """A one-sided complex entry is not hermitian."""
        hop = HoppingCoefficients({(1, 0, 0): 1.0j})
        assert not hop.is_hermitian()
        with pytest.raises(ModelValidationError, match="not hermitian"):
            hop.require_hermitian()

    def test_add_and_scale(self) -> None:
        """Addition merges supports; scaling multiplies amplitudes."""
        total = standard_laplacian() + standard_laplacian().scaled(-1.0)
        assert not total
        assert standard_laplacian().scaled(2.0).entry((0, 0, 0)) == 12.0

    def test_reflected_even_map_is_unchanged(self) -> None:
        """The Laplacian is even, so reflecting it changes nothing."""
        lap = standard_laplacian()
        assert lap.is_even()
        assert lap.reflected().entries == lap.entries

    def test_from_arrays(self) -> None:
        """Parallel site and amplitude arrays build the same map."""
        hop = HoppingCoefficients.from_arrays(np.array([[0, 0, 0], [1, 0, 0]]), [3.0, -1.0])
        assert hop.entry((1, 0, 0)) == -1.0
        assert hop.entry((0, 0, 0)) == 3.0


class TestDispersion:
    """Tests for dispersion evaluation and its derivatives."""

    def test_laplacian_values(self, laplacian: HoppingCoefficients) -> None:
        """The standard Laplacian spans [0, 12]."""
        assert dispersion_eval(laplacian, np.zeros(3)) == pytest.approx(0.0, abs=1e-14)
        assert dispersion_eval(laplacian, np.full(3, math.pi)) == pytest.approx(12.0)
        assert dispersion_eval(standard_laplacian(0.5), np.full(3, math.pi)) == pytest.approx(6.0)

    def test_vectorized_matches_closed_form(self, laplacian: HoppingCoefficients) -> None:
        """Batch evaluation agrees with 2 * sum(1 - cos p_i)."""
        rng = np.random.default_rng(7)
        points = rng.uniform(-math.pi, math.pi, size=(50, 3))
        values = np.asarray(dispersion_eval(laplacian, points))
        expected = 2.0 * (1.0 - np.cos(points)).sum(axis=1)
        assert values.shape == (50,)
        np.testing.assert_allclose(values, expected, atol=1e-12)

    def test_non_hermitian_evaluation_raises(self) -> None:
        """A complex dispersion value is a validation error."""
        with pytest.raises(ModelValidationError):
            dispersion_eval(HoppingCoefficients({(1, 0, 0): 1.0j}), np.array([0.3, 0.0, 0.0]))

    def test_random_hermitian_hopping_is_real(self) -> None:
        """Hermitian hoppings evaluate to real values with zero imaginary part."""
        rng = np.random.default_rng(17)
        points = rng.uniform(-math.pi, math.pi, size=(64, 3))
        for _ in range(20):
            entries: dict[tuple[int, int, int], complex] = {(0, 0, 0): float(rng.standard_normal())}
            for site in rng.integers(-3, 4, size=(5, 3)):
                key = (int(site[0]), int(site[1]), int(site[2]))
                mirror = (-key[0], -key[1], -key[2])
                if key not in entries and mirror not in entries:
                    entries[key] = complex(rng.standard_normal(), rng.standard_normal())
            hopping = HoppingCoefficients.from_entries(entries)
            values = np.asarray(dispersion_eval(hopping, points))
            assert np.isrealobj(values)
            full = np.asarray(hopping.fourier(points))
            np.testing.assert_allclose(full.imag, 0.0, atol=1e-12)
            np.testing.assert_allclose(values, full.real, atol=1e-12)

    def test_gradient_and_hessian_at_origin(self, laplacian: HoppingCoefficients) -> None:
        """The Laplacian is 2I-curved and flat at the origin."""
        np.testing.assert_allclose(dispersion_gradient(laplacian, np.zeros(3)), 0.0, atol=1e-14)
        np.testing.assert_allclose(dispersion_hessian(laplacian, np.zeros(3)), 2.0 * np.eye(3))

    def test_gradient_matches_finite_difference(self, laplacian: HoppingCoefficients) -> None:
        """Analytic gradient agrees with central differences."""
        p = np.array([0.4, -1.1, 2.0])
        step = 1e-6
        numeric = [
            (
                float(dispersion_eval(laplacian, p + step * e))
                - float(dispersion_eval(laplacian, p - step * e))
            )
            / (2 * step)
            for e in np.eye(3)
        ]
        np.testing.assert_allclose(dispersion_gradient(laplacian, p), numeric, rtol=1e-6)

    def test_wrap_and_distance(self) -> None:
        """Points wrap into (-pi, pi]; distance is periodic."""
        np.testing.assert_allclose(wrap_to_torus([-math.pi, 0.5, -0.25]), [math.pi, 0.5, -0.25])
        assert torus_distance([math.pi - 0.1, 0, 0], [-math.pi + 0.1, 0, 0]) == pytest.approx(0.2)


class TestGlobalMinimum:
    """Tests for the grid-plus-Newton minimum search."""

    def test_laplacian_minimum_at_origin(self, laplacian: HoppingCoefficients) -> None:
        """The Laplacian has a unique non-degenerate minimum 0 at the origin."""
        minimum = find_global_minimum(laplacian)
        assert minimum.status is MinimumStatus.OK
        assert minimum.unique
        assert minimum.min_value == pytest.approx(0.0, abs=1e-12)
        assert minimum.hessian_min_eigenvalue == pytest.approx(2.0)

    def test_off_origin_minimum(self, laplacian: HoppingCoefficients) -> None:
        """The negated Laplacian attains -12 at (pi, pi, pi)."""
        minimum = find_global_minimum(laplacian.scaled(-1.0))
        assert minimum.status is MinimumStatus.OFF_ORIGIN
        assert minimum.min_value == pytest.approx(-12.0)
        assert torus_distance(minimum.minimizer, np.full(3, math.pi)) < 1e-6

    def test_degenerate_minimum_is_a_status(self) -> None:
        """A quartic minimum is reported, not raised."""
        minimum = find_global_minimum(_quartic_hopping())
        assert minimum.degenerate
        assert minimum.status is MinimumStatus.DEGENERATE
        assert not DispersionRelation(_quartic_hopping(), minimum).threshold_classifiable

    def test_two_minima_are_not_unique(self) -> None:
        """1 - cos(2 p1) vanishes at p1 = 0 and p1 = pi."""
        hop = HoppingCoefficients.from_entries(
            {(0, 0, 0): 1.0 + 4.0, (2, 0, 0): -0.5, (0, 1, 0): -1.0, (0, 0, 1): -1.0}
        )
        dispersion = DispersionRelation.from_hopping(hop)
        assert not dispersion.minimum.unique
        assert not dispersion.threshold_classifiable

    def test_coarse_scan_rejected(self, laplacian: HoppingCoefficients) -> None:
        """The scan needs at least 8 points per axis."""
        with pytest.raises(GridError):
            find_global_minimum(laplacian, scan_resolution=4)

    def test_dispersion_relation_accessors(self, laplacian: HoppingCoefficients) -> None:
        """The cached relation exposes the minimum and evaluates like the hopping."""
        dispersion = DispersionRelation.from_hopping(laplacian)
        assert dispersion.value_at_origin == pytest.approx(0.0, abs=1e-14)
        assert dispersion.min_value == pytest.approx(0.0, abs=1e-12)
        assert dispersion(np.full(3, math.pi)) == pytest.approx(12.0)
        np.testing.assert_allclose(dispersion.hessian_at_min, 2.0 * np.eye(3), atol=1e-8)


class TestConditionalNegativeDefiniteness:
    """Tests for the CND criterion and the inequality it implies."""

    def test_laplacian_is_cnd(self, laplacian: HoppingCoefficients) -> None:
        """Non-positive real off-origin coefficients."""
        assert is_conditionally_negative_definite(laplacian)

    def test_positive_hopping_is_not_cnd(self, laplacian: HoppingCoefficients) -> None:
        """Positive off-origin coefficients violate the criterion."""
        assert not is_conditionally_negative_definite(laplacian.scaled(-1.0))

    def test_complex_hopping_is_not_cnd(self) -> None:
        """Complex off-origin coefficients violate the criterion."""
        hop = HoppingCoefficients.from_entries({(0, 0, 0): 6.0, (1, 0, 0): -1.0 + 0.2j})
        assert not is_conditionally_negative_definite(hop)

    def test_inequality_closed_form(self, laplacian: HoppingCoefficients) -> None:
        """For the Laplacian F(p, q) = 2 sum (1 - cos p_i)(1 - cos q_i)."""
        rng = np.random.default_rng(3)
        p = rng.uniform(-math.pi, math.pi, size=(40, 3))
        q = rng.uniform(-math.pi, math.pi, size=(40, 3))
        expected = 2.0 * ((1 - np.cos(p)) * (1 - np.cos(q))).sum(axis=1)
        np.testing.assert_allclose(cnd_inequality(laplacian, p, q), expected, atol=1e-12)
        assert cnd_inequality(laplacian, p[0], np.zeros(3)) == pytest.approx(0.0, abs=1e-12)

    def test_inequality_positive_off_the_origin(self, laplacian: HoppingCoefficients) -> None:
        """F(p, q) > 0 for 100 random q away from the origin, and F(p, 0) = 0."""
        rng = np.random.default_rng(23)
        q = rng.uniform(-math.pi, math.pi, size=(400, 3))
        q = q[np.linalg.norm(q, axis=1) > 0.1][:100]
        p = rng.uniform(-math.pi, math.pi, size=(100, 3))
        assert len(q) == 100
        assert np.all(np.asarray(cnd_inequality(laplacian, p, q)) > 0.0)
        at_zero = np.asarray(cnd_inequality(laplacian, p, np.zeros((100, 3))))
        np.testing.assert_allclose(at_zero, 0.0, atol=1e-12)

    def test_margin_sign(self, laplacian: HoppingCoefficients) -> None:
        """The sampled margin is non-negative exactly for the CND dispersion."""
        q = np.array([0.5, 0.5, 0.5])
        assert cnd_inequality_margin(laplacian, q, 512) > -1e-12
        assert cnd_inequality_margin(laplacian.scaled(-1.0), q, 512) < 0.0

    def test_margin_keeps_explicit_points(self, laplacian: HoppingCoefficients) -> None:
        """Explicit points on the exceptional set are evaluated, not excluded."""
        margin = cnd_inequality_margin(
            laplacian, np.array([0.5, 0.5, 0.5]), 16, points=np.zeros((1, 3))
        )
        assert margin == pytest.approx(0.0, abs=1e-12)

    def test_quadratic_form_check(self, laplacian: HoppingCoefficients) -> None:
        """The quadratic form is non-positive on zero-sum vectors only for CND."""
        assert quadratic_form_cnd_check(laplacian, trials=50) <= 1e-9
        assert quadratic_form_cnd_check(laplacian.scaled(-1.0), trials=50) > 0.0


class TestCoordinateHamiltonian:
    """Tests for the coordinate-space Hamiltonian on a box."""

    def test_delta_response(self, laplacian: HoppingCoefficients) -> None:
        """h delta_0 is 6 at the origin and -1 at the six neighbours."""
        out = apply_coordinate_hamiltonian(laplacian, None, {(0, 0, 0): 1.0}, box_radius=3)
        assert out[3, 3, 3] == 6.0
        assert out[4, 3, 3] == -1.0
        assert out[3, 3, 2] == -1.0
        assert np.count_nonzero(out) == 7

    def test_potential_is_diagonal(self, laplacian: HoppingCoefficients) -> None:
        """The potential adds v_hat(x) psi(x)."""
        potential = HoppingCoefficients({(0, 0, 0): -2.0})
        out = apply_coordinate_hamiltonian(laplacian, potential, {(0, 0, 0): 1.0}, box_radius=3)
        assert out[3, 3, 3] == 4.0

    def test_truncation_warning(self, laplacian: HoppingCoefficients) -> None:
        """A state touching the boundary triggers a TruncationWarning."""
        with pytest.warns(TruncationWarning):
            apply_coordinate_hamiltonian(laplacian, None, {(3, 0, 0): 1.0}, box_radius=3)

    def test_state_outside_box_rejected(self, laplacian: HoppingCoefficients) -> None:
        """Sites beyond the box radius are an error."""
        with pytest.raises(GridError, match="outside the box"):
            apply_coordinate_hamiltonian(laplacian, None, {(5, 0, 0): 1.0}, box_radius=3)

    def test_matrix_matches_application(self, laplacian: HoppingCoefficients) -> None:
        """The dense matrix applies like the stencil on interior states."""
        rng = np.random.default_rng(11)
        state = np.zeros((7, 7, 7))
        state[2:5, 2:5, 2:5] = rng.standard_normal((3, 3, 3))
        potential = HoppingCoefficients({(0, 0, 0): 1.5, (1, 1, 0): -0.5})
        matrix = coordinate_matrix(laplacian, potential, box_radius=3)
        applied = apply_coordinate_hamiltonian(laplacian, potential, state, box_radius=3)
        np.testing.assert_allclose(matrix @ state.reshape(-1), applied.reshape(-1), atol=1e-12)

    def test_semigroup_positive_for_laplacian(self, laplacian: HoppingCoefficients) -> None:
        """exp(-t h) is positivity preserving for a CND hopping with any real potential."""
        potential = HoppingCoefficients({(0, 0, 0): -3.0, (1, 0, 0): 2.0, (-1, 0, 0): 2.0})
        for t in (0.1, 1.0):
            check = semigroup_positivity_check(laplacian, potential, box_radius=2, t=t)
            assert check.positive

    def test_semigroup_positive_on_larger_box(self, laplacian: HoppingCoefficients) -> None:
        """Positivity also holds on the box of radius 3."""
        potential = HoppingCoefficients({(0, 0, 0): -3.0, (0, 1, 1): 1.0, (0, -1, -1): 1.0})
        for t in (0.5, 2.0):
            check = semigroup_positivity_check(laplacian, potential, box_radius=3, t=t)
            assert check.positive
            assert check.min_entry >= -1e-12

    def test_semigroup_not_positive_for_positive_hopping(
        self, laplacian: HoppingCoefficients
    ) -> None:
        """Positive hopping produces negative semigroup entries."""
        check = semigroup_positivity_check(laplacian.scaled(-1.0), None, box_radius=2, t=1.0)
        assert not check.positive
        assert check.min_entry < 0.0

    def test_semigroup_argument_checks(self, laplacian: HoppingCoefficients) -> None:
        """Non-positive time and small boxes are rejected."""
        with pytest.raises(ModelValidationError, match="positive"):
            semigroup_positivity_check(laplacian, None, box_radius=2, t=0.0)
        with pytest.raises(GridError, match="box_radius"):
            semigroup_positivity_check(laplacian, None, box_radius=1, t=1.0)
