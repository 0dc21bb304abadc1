# Standard Library
import itertools

# Third Party
import numpy as np
import pytest
from hypothesis import given, strategies as st

# Local
from eqlab.rng import make_rng
from eqlab.exceptions import (
    BadDimension,
    InvalidState,
    TooManyLevels,
    NotOrthonormal,
    DimensionMismatch,
    AmbiguousClustering,
)
from eqlab.spectral import (
    haar_unitary,
    build_hamiltonian,
    random_hamiltonian,
    adapted_eigenbasis,
    from_eigendecomposition,
    check_nondegenerate_gaps,
)


def reported_pairs(report):
    """Unordered pairs of index pairs named by each violation."""
    return {
        frozenset([(v.n, v.k), (v.m, v.l)]) for v in report.violations
    }


class TestHamiltonianConstruction:
    """Test suite for grouping eigenvalues into levels."""

    def test_degenerate_eigenvalues_share_a_level(self):
        """Test that repeated eigenvalues form one level."""
        # Act
        H = build_hamiltonian(np.diag([1.0, 2.0, 1.0]))

        # Assert
        assert H.n_levels == 2
        assert [lvl.multiplicity for lvl in H.levels] == [2, 1]
        np.testing.assert_allclose(H.energies, [1.0, 2.0])

    def test_matrix_round_trip(self, rng):
        """The dense matrix rebuilt from levels equals the input."""
        # Arrange
        A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        M = 0.5 * (A + A.conj().T)

        # Act
        H = build_hamiltonian(M)

        # Assert
        np.testing.assert_allclose(H.matrix, M, atol=1e-10)
        assert H.completeness_error() < 1e-12

    def test_wide_near_degenerate_chain_is_ambiguous(self):
        """Steps below delta_deg that add up past 10 delta_deg are refused."""
        # Arrange
        values = [0.0009 * i for i in range(15)] + [1.0]

        # Act / Assert
        with pytest.raises(AmbiguousClustering):
            build_hamiltonian(np.diag(values), delta_deg=1e-3)

    def test_from_eigendecomposition_sorts_energies(self):
        """Test that supplied energies come back ascending."""
        # Act
        H = from_eigendecomposition([2.0, 0.0], np.eye(2))

        # Assert
        np.testing.assert_allclose(H.energies, [0.0, 2.0])
        np.testing.assert_allclose(H.matrix, np.diag([2.0, 0.0]))

    def test_from_eigendecomposition_rejects_bad_basis(self):
        """Test that a non-orthonormal eigenbasis is refused."""
        with pytest.raises(NotOrthonormal):
            from_eigendecomposition([0.0, 1.0], [[1.0, 1.0], [0.0, 1.0]])

    def test_from_eigendecomposition_rejects_count_mismatch(self):
        """Test that three energies cannot pair with two vectors."""
        with pytest.raises(DimensionMismatch):
            from_eigendecomposition([0.0, 1.0, 2.0], np.eye(2))

    def test_tensor_identity_keeps_energies(self, four_level):
        """Test that H (x) I has the same levels, each 3 times as wide."""
        # Act
        lifted = four_level.tensor_identity(3)

        # Assert
        assert lifted.dimension == 12
        np.testing.assert_allclose(lifted.energies, four_level.energies)
        assert all(lvl.multiplicity == 3 for lvl in lifted.levels)

    @given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 10))
    def test_gue_draws_are_consistent(self, seed, d):
        """Every drawn Hamiltonian has a unitary eigenbasis."""
        # Act
        H = random_hamiltonian(d, "gue", seed)

        # Assert
        V = H.eigenvectors
        np.testing.assert_allclose(V.conj().T @ V, np.eye(d), atol=1e-10)
        assert np.all(np.diff(H.energies) > 0)


class TestGapCheck:
    """Test suite for the non-degenerate energy gaps check."""

    def test_generic_spectrum_passes(self, four_level):
        """Test that 0, 1.1, 2.3, 3.6 has no repeated gap."""
        # Act
        report = check_nondegenerate_gaps(four_level)

        # Assert
        assert report.passed
        assert report.violations == ()
        assert report.n_levels == 4

    def test_product_hamiltonian_fails_with_quadruple(
        self, product_hamiltonian
    ):
        """The reported quadruple really has E_k - E_l = E_m - E_n."""
        # Act
        report = check_nondegenerate_gaps(product_hamiltonian)

        # Assert
        assert not report.passed
        v = report.violations[0]
        E = product_hamiltonian.energies
        assert E[v.k] - E[v.l] == pytest.approx(E[v.m] - E[v.n])
        assert (v.k, v.l) != (v.m, v.n)
        assert v.indices == (v.k, v.l, v.m, v.n)

    def test_equal_spacing_reports_the_quadruple(self):
        """0, 1, 2 repeats the gap 1 as (1, 0) and (2, 1)."""
        # Act
        report = check_nondegenerate_gaps(
            build_hamiltonian(np.diag([0.0, 1.0, 2.0]))
        )

        # Assert
        assert not report.passed
        assert reported_pairs(report) == {frozenset([(0, 2), (1, 1)])}

    @given(
        n=st.integers(3, 7),
        spacing=st.floats(0.1, 10.0),
        offset=st.floats(-5.0, 5.0),
    )
    def test_equal_spacing_reports_every_quadruple(self, n, spacing, offset):
        """Each pair of level pairs with equal index sums is reported."""
        # Arrange
        energies = offset + spacing * np.arange(n)
        H = from_eigendecomposition(energies, np.eye(n))
        pairs = [(a, b) for a in range(n) for b in range(a, n)]
        expected = {
            frozenset([p, q])
            for p, q in itertools.combinations(pairs, 2)
            if sum(p) == sum(q)
        }

        # Act
        report = check_nondegenerate_gaps(H)

        # Assert
        assert not report.passed
        assert len(report.violations) == len(expected)
        assert reported_pairs(report) == expected
        E = H.energies
        for v in report.violations:
            assert E[v.k] - E[v.l] == pytest.approx(
                E[v.m] - E[v.n], abs=1e-9 * spacing * n
            )
            assert v.mismatch <= report.tolerance

    def test_close_gaps_are_near_misses(self):
        """Gaps differing by 3e-6 pass at 1e-6 but are flagged."""
        # Arrange
        H = from_eigendecomposition([0.0, 1.0, 2.000003, 4.5], np.eye(4))

        # Act
        report = check_nondegenerate_gaps(H, delta_gap=1e-6)

        # Assert
        assert report.passed
        assert len(report.near_misses) == 1
        assert report.near_misses[0].mismatch == pytest.approx(3e-6)

    def test_single_level_passes(self):
        """Test that a multiple of the identity has no gaps to repeat."""
        assert check_nondegenerate_gaps(build_hamiltonian(np.eye(3))).passed

    def test_too_many_levels(self):
        """Test that the scan stops at 64 distinct levels."""
        with pytest.raises(TooManyLevels):
            check_nondegenerate_gaps(
                from_eigendecomposition(np.arange(65.0) ** 1.5, np.eye(65))
            )


class TestAdaptedBasis:
    """Test suite for adapted_eigenbasis."""

    def test_one_vector_per_occupied_level(self):
        """Test that an empty level gets no basis vector."""
        # Arrange
        H = build_hamiltonian(np.diag([0.0, 0.0, 1.0, 2.0]))
        psi = np.array([0.6, 0.0, 0.8, 0.0])

        # Act
        basis = adapted_eigenbasis(H, psi)

        # Assert
        assert len(basis.entries) == 2
        np.testing.assert_allclose(basis.amplitudes, [0.6, 0.8])
        np.testing.assert_allclose(basis.state_at(0.0), psi, atol=1e-12)

    def test_state_at_matches_propagation(self, gue8, rng):
        """Test state_at against V exp(-iEt) V^dagger psi."""
        # Arrange
        psi = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        psi /= np.linalg.norm(psi)
        V, E = gue8.eigenvectors, gue8.eigenvalues
        expected = V @ (np.exp(-1j * E * 0.7) * (V.conj().T @ psi))

        # Act
        result = adapted_eigenbasis(gue8, psi).state_at(0.7)

        # Assert
        np.testing.assert_allclose(result, expected, atol=1e-10)

    def test_rejects_unnormalized_state(self, four_level):
        """Test that a vector of norm sqrt(2) is refused."""
        with pytest.raises(InvalidState):
            adapted_eigenbasis(four_level, [1.0, 1.0, 0.0, 0.0])

    def test_rejects_wrong_dimension(self, four_level):
        """Test that a qubit state cannot evolve under a 4-level H."""
        with pytest.raises(DimensionMismatch):
            adapted_eigenbasis(four_level, [1.0, 0.0])


class TestRandomDraws:
    """Test suite for random Hamiltonians and unitaries."""

    def test_same_seed_same_hamiltonian(self):
        """Test that draws are reproducible from the seed."""
        # Act
        a = random_hamiltonian(5, "gue", seed=4)
        b = random_hamiltonian(5, "gue", seed=4)

        # Assert
        np.testing.assert_array_equal(a.matrix, b.matrix)

    @pytest.mark.parametrize("seed", [0, 1, 2, 17, 99])
    def test_spaced_spectrum_passes_gap_check(self, seed):
        """Jitter never pulls neighbouring levels closer than 0.4."""
        # Act
        H = random_hamiltonian(6, "spaced-spectrum", seed=seed)

        # Assert
        assert check_nondegenerate_gaps(H).passed
        assert np.all(np.diff(H.energies) > 0.4)

    @pytest.mark.parametrize("d, ensemble", [(1, "gue"), (4, "poisson")])
    def test_rejects_bad_arguments(self, d, ensemble):
        """Test that d < 2 and unknown ensembles are refused."""
        with pytest.raises(ValueError):
            random_hamiltonian(d, ensemble)

    @pytest.mark.parametrize("d", [0, 1])
    def test_bad_dimension(self, d):
        """Test that a too small dimension raises BadDimension."""
        with pytest.raises(BadDimension):
            random_hamiltonian(d, "gue", seed=1)

    def test_haar_unitary_is_unitary(self):
        """Test that U U^dagger = I for a Haar draw."""
        # Act
        U = haar_unitary(5, make_rng(9))

        # Assert
        np.testing.assert_allclose(U @ U.conj().T, np.eye(5), atol=1e-12)
