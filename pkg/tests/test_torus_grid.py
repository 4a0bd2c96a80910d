"""Tests for the shifted-midpoint grid, refined quadrature and Nystrom matrices."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from sill.coexistence import zd_potential
from sill.errors import EvaluationError, GridError
from sill.lattice_model import HoppingCoefficients
from sill.torus_grid import (
    TWO_PI,
    convolution_matrix,
    export_matrix,
    integrate_refined,
    integrate_refined_many,
    make_grid,
    momentum_kernel,
    richardson,
)


class TestTorusGrid:
    """Tests for grid construction."""

    @pytest.mark.parametrize("n", [2, 5, 7, 0])
    def test_invalid_sizes_rejected(self, n: int) -> None:
        """Odd or tiny grids raise GridError."""
        with pytest.raises(GridError):
            make_grid(n)

    def test_nodes_and_weights(self) -> None:
        """N^3 nodes with total weight (2 pi)^3."""
        grid = make_grid(6)
        assert grid.nodes.shape == (216, 3)
        assert grid.weights.sum() == pytest.approx(TWO_PI**3)
        assert grid.total_weight == pytest.approx(TWO_PI**3)

    def test_origin_is_not_a_node(self) -> None:
        """Shifted midpoints avoid the origin."""
        grid = make_grid(8)
        assert np.min(np.linalg.norm(grid.nodes, axis=1)) > 0.1

    def test_reflection_index(self) -> None:
        """The reflection index maps every node to its negative."""
        grid = make_grid(8)
        np.testing.assert_allclose(grid.nodes[grid.reflection_index], -grid.nodes, atol=1e-14)

    def test_slabs_cover_nodes_in_order(self) -> None:
        """Slabs concatenate to the full node array."""
        grid = make_grid(4)
        stacked = np.vstack([slab for _, slab in grid.slabs()])
        np.testing.assert_allclose(stacked, grid.nodes)

    def test_grid_is_cached(self) -> None:
        """make_grid returns the same object for the same size."""
        assert make_grid(10) is make_grid(10)


class TestQuadrature:
    """Tests for refined midpoint quadrature."""

    def test_constant_integrand(self) -> None:
        """A constant integrates to (2 pi)^3 at every resolution."""
        result = integrate_refined(lambda p: np.ones(len(p)), [4, 8, 16])
        assert result.resolutions == (4, 8, 16)
        assert result.value == pytest.approx(TWO_PI**3)
        assert result.error_estimate == pytest.approx(0.0, abs=1e-9)

    def test_trigonometric_integrand_vanishes(self) -> None:
        """Integrals of non-constant trigonometric polynomials vanish."""
        result = integrate_refined(lambda p: np.cos(p[:, 0]) * np.cos(p[:, 1]), [4, 8])
        assert result.value == pytest.approx(0.0, abs=1e-10)

    def test_single_resolution_has_nan_error(self) -> None:
        """One resolution gives its value and no error estimate."""
        result = integrate_refined(lambda p: np.ones(len(p)), [4])
        assert result.value == pytest.approx(TWO_PI**3)
        assert math.isnan(result.error_estimate)

    def test_richardson_removes_first_order_term(self) -> None:
        """I + C/N extrapolates to I exactly."""
        assert richardson((8, 2.0 + 3.0 / 8), (16, 2.0 + 3.0 / 16)) == pytest.approx(2.0)

    def test_increments(self) -> None:
        """Increments are the absolute differences of consecutive estimates."""
        result = integrate_refined(lambda p: 1.0 / (7.0 - np.cos(p).sum(axis=1)), [4, 8, 12])
        assert len(result.increments) == 2
        assert result.error_estimate == result.increments[-1]

    def test_vector_valued_integrand(self) -> None:
        """Columns are integrated independently."""
        results = integrate_refined_many(
            lambda p: np.column_stack([np.ones(len(p)), 1.0 + np.cos(p[:, 2])]), [4, 8]
        )
        assert len(results) == 2
        assert results[0].value == pytest.approx(TWO_PI**3)
        assert results[1].value == pytest.approx(TWO_PI**3)

    def test_non_finite_integrand_raises(self) -> None:
        """A NaN at a node is reported with the node index."""

        def integrand(p: np.ndarray) -> np.ndarray:
            values = np.ones(len(p))
            values[3] = np.nan
            return values

        with pytest.raises(EvaluationError) as excinfo:
            integrate_refined(integrand, [4])
        assert excinfo.value.node_index == 3
        assert excinfo.value.node is not None

    def test_wrong_value_count_raises(self) -> None:
        """An integrand must return one value per node."""
        with pytest.raises(EvaluationError, match="3 values"):
            integrate_refined(lambda p: np.ones(3), [4])

    def test_bad_schedule_rejected(self) -> None:
        """Schedules must be even and increasing."""
        with pytest.raises(GridError):
            integrate_refined(lambda p: np.ones(len(p)), [8, 4])
        with pytest.raises(GridError):
            integrate_refined(lambda p: np.ones(len(p)), [4, 9])


class TestConvolutionMatrix:
    """Tests for Nystrom discretizations of convolution operators."""

    def test_low_rank_matches_callable(self) -> None:
        """Assembly from v_hat agrees with the dense callable kernel."""
        grid = make_grid(4)
        v_hat = zd_potential(2.0, -1.5)
        low_rank = convolution_matrix(v_hat, grid)
        dense = convolution_matrix(momentum_kernel(v_hat), grid)
        np.testing.assert_allclose(low_rank, dense, atol=1e-12)

    def test_real_even_kernel_gives_real_matrix(self) -> None:
        """A real even v_hat produces a real matrix."""
        matrix = convolution_matrix(zd_potential(1.0, 1.0), make_grid(4))
        assert np.isrealobj(matrix)

    def test_complex_kernel(self) -> None:
        """A real one-sided v_hat produces a hermitian complex symmetrized matrix."""
        v_hat = HoppingCoefficients({(1, 0, 0): 0.5})
        matrix = convolution_matrix(v_hat, make_grid(4), symmetrized=True)
        assert np.iscomplexobj(matrix)
        np.testing.assert_allclose(matrix, matrix.conj().T, atol=1e-14)

    def test_symmetrized_is_similar_to_plain(self) -> None:
        """Plain and symmetrized forms share their spectrum."""
        grid = make_grid(4)
        v_hat = zd_potential(1.0, -2.0)
        plain = np.linalg.eigvals(convolution_matrix(v_hat, grid))
        symmetrized = np.linalg.eigvalsh(convolution_matrix(v_hat, grid, symmetrized=True))
        np.testing.assert_allclose(np.sort(plain.real), symmetrized, atol=1e-10)

    def test_contact_potential_is_rank_one(self) -> None:
        """v_hat = mu delta_0 gives one eigenvalue mu."""
        matrix = convolution_matrix(HoppingCoefficients({(0, 0, 0): -3.0}), make_grid(6))
        values = np.linalg.eigvals(matrix)
        assert np.sum(np.abs(values) > 1e-10) == 1
        assert values[np.argmax(np.abs(values))].real == pytest.approx(-3.0)

    def test_plane_waves_diagonalize_the_matrix(self) -> None:
        """exp(i(p, t)) is an eigenvector with eigenvalue v_hat(t) when N resolves the support."""
        v_hat = HoppingCoefficients.from_entries(
            {(0, 0, 0): -1.0, (8, 0, 0): 0.3, (3, -2, 5): 0.2 - 0.1j}
        )
        grid = make_grid(10)
        matrix = convolution_matrix(v_hat, grid)
        support = [site for site, _ in v_hat.items()]
        for site in [*support, (1, 1, 1)]:
            wave = np.exp(1j * grid.nodes @ np.asarray(site, dtype=np.float64))
            np.testing.assert_allclose(matrix @ wave, v_hat.entry(site) * wave, atol=1e-12)

    def test_empty_kernel(self) -> None:
        """The zero interaction gives the zero matrix."""
        assert not np.any(convolution_matrix(HoppingCoefficients(), make_grid(4)))


class TestExportMatrix:
    """Tests for debug exports."""

    def test_csv(self, tmp_path: Path) -> None:
        """CSV export round-trips through numpy.loadtxt."""
        matrix = np.arange(6.0).reshape(2, 3) / 7.0
        target = export_matrix(matrix, tmp_path / "m.csv")
        np.testing.assert_array_equal(np.loadtxt(target, delimiter=","), matrix)

    def test_complex_csv_has_paired_columns(self, tmp_path: Path) -> None:
        """Complex entries occupy two columns."""
        matrix = np.array([[1 + 2j, 3 - 1j]])
        table = np.loadtxt(export_matrix(matrix, tmp_path / "m.csv"), delimiter=",")
        np.testing.assert_array_equal(table, [1.0, 2.0, 3.0, -1.0])

    def test_bin_with_sidecar(self, tmp_path: Path) -> None:
        """Binary export writes raw data plus a JSON sidecar."""
        matrix = np.eye(3) * 2.5
        target = export_matrix(matrix, tmp_path / "m.bin", fmt="bin")
        meta = json.loads((tmp_path / "m.bin.json").read_text(encoding="utf-8"))
        assert meta["shape"] == [3, 3]
        assert meta["dtype"] == "<f8"
        np.testing.assert_array_equal(np.fromfile(target, dtype="<f8").reshape(3, 3), matrix)

    def test_unknown_format(self, tmp_path: Path) -> None:
        """Unknown formats are rejected."""
        with pytest.raises(ValueError, match="unknown export format"):
            export_matrix(np.eye(2), tmp_path / "m.npy", fmt="npy")  # type: ignore[arg-type]
