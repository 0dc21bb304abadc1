# Third Party
import numpy as np
import pytest
from hypothesis import given, strategies as st

# Local
from eqlab.rng import make_rng
from eqlab.spectral import build_hamiltonian
from eqlab.matrixkit import SIGMA_X, ket, tensor, partial_trace
from eqlab.exceptions import (
    ConfigError,
    BadDimension,
    InvalidState,
    DimensionMismatch,
)
from eqlab.dynamics import (
    DensityOperator,
    TimeAverageConvention,
    purify,
    evolve,
    dephase,
    haar_state,
    sample_mean,
    evolve_batch,
    time_chunks,
    level_populations,
    expectation_series,
    random_mixed_state,
    effective_dimension,
    equal_superposition,
)


@pytest.fixture
def qubit_x():
    """sigma_x as a two-level Hamiltonian."""
    return build_hamiltonian(SIGMA_X)


class TestDensityOperator:
    """Test suite for state validation."""

    def test_from_vector_keeps_the_vector(self):
        """Test that a pure state keeps its vector and has purity 1."""
        # Act
        rho = DensityOperator.from_vector([0.6, 0.8j])

        # Assert
        assert rho.is_pure
        assert rho.purity() == pytest.approx(1.0)
        expected = [[0.36, -0.48j], [0.48j, 0.64]]
        np.testing.assert_allclose(rho.matrix, expected)

    @pytest.mark.parametrize(
        "matrix",
        [
            [[0.5, 0.0], [0.0, 0.6]],
            [[1.5, 0.0], [0.0, -0.5]],
            [[0.5, 0.5], [0.0, 0.5]],
        ],
    )
    def test_from_matrix_rejects_non_states(self, matrix):
        """Bad trace, negative eigenvalue and asymmetry are refused."""
        with pytest.raises(InvalidState):
            DensityOperator.from_matrix(matrix)

    def test_from_vector_rejects_unnormalized(self):
        """Test that a vector of norm sqrt(2) is refused."""
        with pytest.raises(InvalidState):
            DensityOperator.from_vector([1.0, 1.0])


class TestEvolution:
    """Test suite for evolve and evolve_batch."""

    def test_half_rabi_period(self, qubit_x):
        """sigma_x drives |0> to |1> at t = pi/2."""
        # Act
        rho0 = DensityOperator.from_vector(ket(0, 2))
        rho = evolve(qubit_x, rho0, np.pi / 2)

        # Assert
        np.testing.assert_allclose(rho.matrix, np.diag([0, 1]), atol=1e-12)
        assert rho.is_pure

    def test_zero_time_is_identity(self, gue8, rng):
        """Test that evolving for t = 0 returns the initial state."""
        # Arrange
        rho0 = random_mixed_state(8, rng)

        # Act
        rho = evolve(gue8, rho0, 0.0)

        # Assert
        np.testing.assert_allclose(rho.matrix, rho0.matrix, atol=1e-12)

    def test_purity_is_conserved(self, gue8, rng):
        """Test that unitary evolution keeps tr(rho^2)."""
        # Arrange
        rho0 = random_mixed_state(8, rng)
        times = rng.uniform(0, 50, 20)

        # Act
        states = evolve_batch(gue8, rho0, times)

        # Assert
        purities = np.einsum("tij,tji->t", states, states).real
        np.testing.assert_allclose(purities, rho0.purity(), atol=1e-10)

    def test_batch_matches_single(self, gue8, rng):
        """Test that each slice of the batch equals a single evolve."""
        # Arrange
        rho0 = haar_state(8, rng)
        times = [0.3, 1.7, 12.0]

        # Act
        states = evolve_batch(gue8, rho0, times)

        # Assert
        for t, state in zip(times, states):
            np.testing.assert_allclose(
                state, evolve(gue8, rho0, t).matrix, atol=1e-10
            )

    def test_chunked_batches_match_one_batch(self, gue8, rng):
        """Test that feeding time_chunks slices gives the same stack."""
        # Arrange
        rho0 = random_mixed_state(8, rng)
        times = rng.uniform(0, 40, 23)

        # Act
        whole = evolve_batch(gue8, rho0, times)
        chunked = np.concatenate(
            [evolve_batch(gue8, rho0, c) for c in time_chunks(times, 5)]
        )

        # Assert
        assert whole.shape == (23, 8, 8)
        np.testing.assert_allclose(chunked, whole, atol=1e-12)

    def test_expectation_series_shapes(self, gue8, rng):
        """Test the output shapes for one operator and a stack of two."""
        # Arrange
        rho0 = haar_state(8, rng)
        ops = np.stack([np.eye(8), gue8.matrix])
        times = np.linspace(0, 5, 300)

        # Act
        single = expectation_series(gue8, rho0, gue8.matrix, times)
        stacked = expectation_series(gue8, rho0, ops, times)

        # Assert
        assert single.shape == (300,)
        assert stacked.shape == (300, 2)
        np.testing.assert_allclose(stacked[:, 0], 1.0, atol=1e-12)
        # Energy is conserved
        np.testing.assert_allclose(single, single[0], atol=1e-10)

    def test_dimension_mismatch(self, qubit_x):
        """Test that a qutrit state cannot evolve under a qubit H."""
        with pytest.raises(DimensionMismatch):
            evolve(qubit_x, DensityOperator.from_vector(ket(0, 3)), 1.0)


class TestDephasing:
    """Test suite for dephase and effective_dimension."""

    def test_qubit_dephases_to_maximally_mixed(self, qubit_x):
        """Test that dephasing |0> under sigma_x gives I/2."""
        # Act
        omega = dephase(qubit_x, DensityOperator.from_vector(ket(0, 2)))

        # Assert
        np.testing.assert_allclose(omega.matrix, np.eye(2) / 2, atol=1e-12)

    def test_counterexample_dephased_state(self, counterexample):
        """omega = I/(2k) with purity 1/(2k) for k = 5."""
        # Arrange
        H, rho0, _ = counterexample

        # Act
        omega = dephase(H, rho0)

        # Assert
        np.testing.assert_allclose(omega.matrix, np.eye(10) / 10, atol=1e-12)
        assert omega.purity() == pytest.approx(0.1)
        assert effective_dimension(H, rho0) == pytest.approx(2.0)

    def test_dephase_is_idempotent_and_stationary(self, gue8, rng):
        """Test that omega is a fixed point of dephasing and dynamics."""
        # Arrange
        rho0 = random_mixed_state(8, rng)

        # Act
        omega = dephase(gue8, rho0)
        twice = dephase(gue8, omega)

        # Assert
        np.testing.assert_allclose(twice.matrix, omega.matrix, atol=1e-10)
        comm = omega.matrix @ gue8.matrix - gue8.matrix @ omega.matrix
        assert np.max(np.abs(comm)) < 1e-10
        later = evolve(gue8, omega, 3.7)
        np.testing.assert_allclose(later.matrix, omega.matrix, atol=1e-10)

    def test_sampled_average_approaches_omega(self, gue8, rng):
        """Test that the sampled time average is close to omega."""
        # Arrange
        rho0 = haar_state(8, rng)
        conv = TimeAverageConvention.default_for(gue8, 2000, seed=5)

        # Act
        average = evolve_batch(gue8, rho0, conv.sample_times()).mean(axis=0)

        # Assert
        omega = dephase(gue8, rho0)
        assert np.max(np.abs(average - omega.matrix)) < 0.02

    def test_eigenstate_has_unit_effective_dimension(self, gue8):
        """Test that an energy eigenstate has d_eff = 1."""
        # Arrange
        rho0 = DensityOperator.from_vector(gue8.levels[3].basis[:, 0])

        # Act / Assert
        assert effective_dimension(gue8, rho0) == pytest.approx(1.0)

    @pytest.mark.parametrize("n_levels", [1, 3, 8])
    def test_equal_superposition_has_n_levels(self, gue8, n_levels):
        """Test that d_eff equals the number of occupied levels."""
        # Act
        rho0 = equal_superposition(gue8, n_levels, make_rng(1))

        # Assert
        assert effective_dimension(gue8, rho0) == pytest.approx(n_levels)

    @pytest.mark.parametrize("n_levels", [0, 9])
    def test_equal_superposition_rejects_level_count(self, gue8, n_levels):
        """Test that 0 levels or more levels than H has are refused."""
        with pytest.raises(BadDimension):
            equal_superposition(gue8, n_levels, make_rng(1))

    @given(seed=st.integers(0, 2**32 - 1))
    def test_effective_dimension_bounds(self, seed):
        """1 <= d_eff <= d and 1/d_eff <= max population."""
        # Arrange
        gen = make_rng(seed)
        H = build_hamiltonian(np.diag(gen.standard_normal(6)))
        rho0 = random_mixed_state(6, gen)

        # Act
        d_eff = effective_dimension(H, rho0)

        # Assert
        assert 1.0 - 1e-12 <= d_eff <= 6.0 + 1e-12
        assert 1.0 / d_eff <= level_populations(H, rho0).max() + 1e-12


class TestPurification:
    """Test suite for purify."""

    def test_pure_state_maps_to_product(self):
        """Test that a pure state purifies to psi (x) |0>."""
        # Arrange
        psi = np.array([0.6, 0.8])

        # Act
        purified = purify(DensityOperator.from_vector(psi))

        # Assert
        np.testing.assert_allclose(purified.vector, np.kron(psi, ket(0, 2)))

    def test_maximally_mixed_qubit_purifies_to_bell_state(self):
        """Test that I/2 purifies to a maximally entangled state."""
        # Act
        purified = purify(DensityOperator.from_matrix(np.eye(2) / 2))

        # Assert
        reduced_other = partial_trace(purified.state.matrix, 2, 2, keep="B")
        np.testing.assert_allclose(reduced_other, np.eye(2) / 2, atol=1e-12)
        assert purified.state.purity() == pytest.approx(1.0)

    def test_reduced_state_and_effective_dimension(self, gue8, rng):
        """Test that purification keeps the state and its d_eff."""
        # Arrange
        rho0 = random_mixed_state(8, rng, rank=3)

        # Act
        purified = purify(rho0)

        # Assert
        np.testing.assert_allclose(purified.reduced(), rho0.matrix, atol=1e-9)
        np.testing.assert_allclose(
            partial_trace(purified.state.matrix, 8, 8), rho0.matrix, atol=1e-9
        )
        lifted = purified.lift_hamiltonian(gue8)
        assert effective_dimension(lifted, purified.state) == pytest.approx(
            effective_dimension(gue8, rho0), abs=1e-9
        )

    def test_lift_operator(self):
        """Test that operators are lifted to A (x) I."""
        # Arrange
        purified = purify(DensityOperator.from_matrix(np.eye(2) / 2))

        # Act
        lifted = purified.lift_operator(SIGMA_X)

        # Assert
        np.testing.assert_allclose(lifted, tensor(SIGMA_X, np.eye(2)))


class TestConvention:
    """Test suite for the time-average convention."""

    @pytest.mark.parametrize(
        "t_max, n_samples, field",
        [(0.0, 10, "convention.t_max"), (1.0, 0, "convention.n_samples")],
    )
    def test_rejects_bad_values(self, t_max, n_samples, field):
        """Test that t_max and n_samples must be positive."""
        # Act
        with pytest.raises(ConfigError) as excinfo:
            TimeAverageConvention(t_max, n_samples)

        # Assert
        assert excinfo.value.field == field

    def test_times_are_reproducible(self):
        """Test that sample times depend only on the seed."""
        # Arrange
        conv = TimeAverageConvention(10.0, 50, seed=4)

        # Act / Assert
        np.testing.assert_array_equal(conv.sample_times(), conv.sample_times())
        assert conv.sample_times().max() <= 10.0

    def test_default_horizon_uses_min_gap(self, four_level):
        """Test that t_max = 1000 / (smallest gap)."""
        conv = TimeAverageConvention.default_for(four_level)
        assert conv.t_max == pytest.approx(1e3 / 1.1)

    def test_sample_mean(self):
        """Test the mean and standard error of four samples."""
        # Act
        estimate = sample_mean([1.0, 2.0, 3.0, 4.0])

        # Assert
        assert estimate.estimate == pytest.approx(2.5)
        expected = np.std([1, 2, 3, 4], ddof=1) / 2
        assert estimate.stderr == pytest.approx(expected)
        assert estimate.n_samples == 4
