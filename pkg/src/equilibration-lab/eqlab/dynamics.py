"""Unitary evolution, the dephased state, effective dimension and
purification.

All time dependence is evaluated in the energy eigenbasis:
``rho(t)_ij = rho_ij * exp(-i (E_i - E_j) t)`` with hbar = 1.
"""

# Standard Library
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

# Third Party
import numpy as np
import numpy.typing as npt
from aws_lambda_powertools import Logger

# My Modules
from eqlab.exceptions import (
    ConfigError,
    BadDimension,
    InvalidState,
    DimensionMismatch,
)
from eqlab.rng import SeedLike, make_rng
from eqlab.spectral import Hamiltonian
from eqlab.matrixkit import (
    CMatrix,
    RVector,
    dagger,
    tensor,
    max_abs,
    as_cmatrix,
    as_cvector,
    eig_hermitian,
    hermitian_asymmetry,
)

logger = Logger(service="eqlab", child=True)

STATE_TOLERANCE = 1e-9
DEFAULT_SAMPLES = 2000
# T_max is this many periods of the slowest dephasing mode
DEFAULT_HORIZON = 1e3
TIME_CHUNK = 256


def validate_state_matrix(rho: CMatrix, tol: float = STATE_TOLERANCE) -> None:
    """Raise InvalidState unless ``rho`` is Hermitian, PSD and unit-trace."""
    asymmetry = hermitian_asymmetry(rho)
    if asymmetry > tol:
        raise InvalidState(f"Density matrix not Hermitian ({asymmetry:.3e})")
    trace = complex(np.trace(rho))
    if abs(trace - 1.0) > tol:
        raise InvalidState(f"Density matrix has trace {trace}")
    lowest = float(np.linalg.eigvalsh(0.5 * (rho + dagger(rho)))[0])
    if lowest < -tol:
        raise InvalidState(f"Density matrix has eigenvalue {lowest:.3e}")


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A density matrix, optionally carrying the pure state it came from.

    Use ``from_vector`` or ``from_matrix`` to build validated instances;
    the raw constructor is for internal results known to be valid.
    """

    matrix: CMatrix
    vector: Optional[npt.NDArray[np.complex128]] = None

    @classmethod
    def from_vector(
        cls, psi: npt.ArrayLike, tol: float = STATE_TOLERANCE
    ) -> "DensityOperator":
        vec = as_cvector(psi)
        norm_sq = float(np.vdot(vec, vec).real)
        if abs(norm_sq - 1.0) > tol:
            raise InvalidState(f"State vector has norm^2 {norm_sq}")
        return cls(matrix=np.outer(vec, vec.conj()), vector=vec)

    @classmethod
    def from_matrix(
        cls, rho: npt.ArrayLike, tol: float = STATE_TOLERANCE
    ) -> "DensityOperator":
        arr = as_cmatrix(rho, square=True)
        validate_state_matrix(arr, tol)
        return cls(matrix=0.5 * (arr + dagger(arr)))

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    def purity(self) -> float:
        return float(np.vdot(self.matrix, self.matrix).real)

    def expectation(self, A: npt.ArrayLike) -> complex:
        return complex(np.trace(as_cmatrix(A) @ self.matrix))


def _check_dimension(H: Hamiltonian, rho: DensityOperator) -> None:
    if rho.dimension != H.dimension:
        raise DimensionMismatch(
            f"State of dimension {rho.dimension} for Hamiltonian of "
            f"dimension {H.dimension}"
        )


@dataclass(frozen=True)
class TimeAverageConvention:
    """Finite-time stand-in for the infinite time average.

    Times are drawn uniformly from ``[0, t_max]`` with the given seed.
    """

    t_max: float
    n_samples: int = DEFAULT_SAMPLES
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise ConfigError("convention.t_max", f"must be > 0: {self.t_max}")
        if self.n_samples < 1:
            raise ConfigError(
                "convention.n_samples", f"must be >= 1: {self.n_samples}"
            )

    @classmethod
    def default_for(
        cls,
        H: Hamiltonian,
        n_samples: int = DEFAULT_SAMPLES,
        seed: int = 0,
        horizon: float = DEFAULT_HORIZON,
    ) -> "TimeAverageConvention":
        """``t_max = horizon / (smallest nonzero energy gap)``."""
        gap = H.min_gap()
        t_max = horizon / gap if gap else horizon
        return cls(t_max=t_max, n_samples=n_samples, seed=seed)

    def sample_times(self) -> RVector:
        return make_rng(self.seed).uniform(0.0, self.t_max, self.n_samples)


def time_chunks(times: RVector, size: int = TIME_CHUNK) -> Iterator[RVector]:
    times = np.asarray(times, dtype=float).reshape(-1)
    for start in range(0, times.size, size):
        yield times[start : start + size]


def propagator(H: Hamiltonian, t: float) -> CMatrix:
    """``U(t) = sum_n exp(-i E_n t) P_n``."""
    V = H.eigenvectors
    return (V * np.exp(-1j * H.eigenvalues * t)) @ dagger(V)


def evolve(H: Hamiltonian, rho0: DensityOperator, t: float) -> DensityOperator:
    """State at time ``t``; pure states stay pure and keep their vector.

    Raises
    ------
    DimensionMismatch
        If the state and Hamiltonian dimensions differ.
    """
    _check_dimension(H, rho0)
    U = propagator(H, t)
    if rho0.vector is not None:
        psi = U @ rho0.vector
        return DensityOperator(matrix=np.outer(psi, psi.conj()), vector=psi)
    return DensityOperator(matrix=U @ rho0.matrix @ dagger(U))


def _phases(gaps: RVector, times: RVector) -> CMatrix:
    return np.exp(-1j * gaps * times[:, None, None])


def _energy_frame(H: Hamiltonian, rho: DensityOperator):
    V = H.eigenvectors
    rho_tilde = dagger(V) @ rho.matrix @ V
    gaps = H.eigenvalues[:, None] - H.eigenvalues[None, :]
    return V, rho_tilde, gaps


def evolve_batch(
    H: Hamiltonian, rho0: DensityOperator, times: npt.ArrayLike
) -> CMatrix:
    """Stack of density matrices ``rho(t)`` with shape ``(T, d, d)``.

    All times are evaluated at once; callers with long time grids feed it
    one ``time_chunks`` slice at a time.
    """
    _check_dimension(H, rho0)
    V, rho_tilde, gaps = _energy_frame(H, rho0)
    t = np.asarray(times, dtype=float).reshape(-1)
    return V @ (rho_tilde * _phases(gaps, t)) @ dagger(V)


def expectation_series(
    H: Hamiltonian,
    rho0: DensityOperator,
    operators: npt.ArrayLike,
    times: npt.ArrayLike,
) -> npt.NDArray[np.complex128]:
    """``tr(A rho(t))`` for one operator or a stack of them.

    Parameters
    ----------
    H : Hamiltonian
        The Hamiltonian.
    rho0 : DensityOperator
        Initial state.
    operators : npt.ArrayLike
        One ``d x d`` operator or a ``(K, d, d)`` stack.
    times : npt.ArrayLike
        Sample times.

    Returns
    -------
    npt.NDArray[np.complex128]
        Shape ``(T,)`` for a single operator, ``(T, K)`` for a stack.
    """
    _check_dimension(H, rho0)
    ops = np.asarray(operators, dtype=np.complex128)
    single = ops.ndim == 2
    if single:
        ops = ops[None]
    if ops.shape[-2:] != (H.dimension, H.dimension):
        raise DimensionMismatch(
            f"Operators of shape {ops.shape[-2:]} for dimension {H.dimension}"
        )
    V, rho_tilde, gaps = _energy_frame(H, rho0)
    ops_tilde = dagger(V) @ ops @ V
    # tr(A rho(t)) = sum_ij A~_ji rho~_ij exp(-i (E_i - E_j) t)
    weights = np.swapaxes(ops_tilde, -1, -2) * rho_tilde
    series = np.concatenate(
        [
            np.einsum("tij,kij->tk", _phases(gaps, chunk), weights)
            for chunk in time_chunks(times)
        ]
    )
    return series[:, 0] if single else series


def dephase(H: Hamiltonian, rho0: DensityOperator) -> DensityOperator:
    """The time-averaged state ``omega = sum_n P_n rho0 P_n``."""
    _check_dimension(H, rho0)
    V, rho_tilde, gaps = _energy_frame(H, rho0)
    # eigenvalues are level energies, so equal entries mean the same level
    omega_tilde = np.where(gaps == 0.0, rho_tilde, 0.0)
    omega = V @ omega_tilde @ dagger(V)
    return DensityOperator(matrix=0.5 * (omega + dagger(omega)))


def level_populations(H: Hamiltonian, rho0: DensityOperator) -> RVector:
    """``p_n = tr(P_n rho0)`` for each level."""
    _check_dimension(H, rho0)
    rho = rho0.matrix
    return np.array(
        [
            np.einsum("ia,ij,ja->", lvl.basis.conj(), rho, lvl.basis).real
            for lvl in H.levels
        ]
    )


def effective_dimension(H: Hamiltonian, rho0: DensityOperator) -> float:
    """Inverse participation ratio ``1 / sum_n p_n^2`` of level weights."""
    populations = level_populations(H, rho0)
    return float(1.0 / np.sum(populations**2))


@dataclass(frozen=True, eq=False)
class Purification:
    """A pure state on ``H (x) H`` whose first reduced state is ``rho0``.

    ``amplitudes[i, a]`` is the coefficient of ``|i>|a>``, so operators of
    the form ``A (x) I`` act as ``A @ amplitudes``.
    """

    amplitudes: CMatrix

    @property
    def ancilla_dim(self) -> int:
        return int(self.amplitudes.shape[1])

    @property
    def vector(self) -> npt.NDArray[np.complex128]:
        return self.amplitudes.reshape(-1)

    @property
    def state(self) -> DensityOperator:
        return DensityOperator.from_vector(self.vector)

    def reduced(self) -> CMatrix:
        return self.amplitudes @ dagger(self.amplitudes)

    def lift_hamiltonian(self, H: Hamiltonian) -> Hamiltonian:
        return H.tensor_identity(self.ancilla_dim)

    def lift_operator(self, A: npt.ArrayLike) -> CMatrix:
        return tensor(as_cmatrix(A), np.eye(self.ancilla_dim))


def purify(rho0: DensityOperator) -> Purification:
    """Standard purification ``sum_i sqrt(lambda_i) |v_i>|i>``.

    Eigenvalues are taken in descending order, so a pure input maps to the
    product vector ``|psi>|0>``.

    Raises
    ------
    InvalidState
        If ``rho0`` is not a valid density matrix.
    """
    d = rho0.dimension
    amplitudes = np.zeros((d, d), dtype=np.complex128)
    if rho0.vector is not None:
        amplitudes[:, 0] = rho0.vector
        return Purification(amplitudes=amplitudes)

    validate_state_matrix(rho0.matrix)
    eigenvalues, eigenvectors = eig_hermitian(rho0.matrix, STATE_TOLERANCE)
    weights = np.sqrt(np.clip(eigenvalues[::-1], 0.0, None))
    amplitudes[:, :] = eigenvectors[:, ::-1] * weights
    residual = max_abs(amplitudes @ dagger(amplitudes) - rho0.matrix)
    logger.debug(f"Purified state of dimension {d}, residual {residual:.2e}")
    return Purification(amplitudes=amplitudes)


def haar_state(d: int, rng: SeedLike) -> DensityOperator:
    """Haar-random pure state."""
    gen = make_rng(rng)
    psi = gen.standard_normal(d) + 1j * gen.standard_normal(d)
    return DensityOperator.from_vector(psi / np.linalg.norm(psi))


def random_mixed_state(
    d: int, rng: SeedLike, rank: Optional[int] = None
) -> DensityOperator:
    """Random mixed state ``G G^dagger / tr(G G^dagger)`` from a Ginibre
    ``d x rank`` matrix (Hilbert-Schmidt measure for full rank)."""
    gen = make_rng(rng)
    k = d if rank is None else rank
    G = gen.standard_normal((d, k)) + 1j * gen.standard_normal((d, k))
    rho = G @ dagger(G)
    return DensityOperator.from_matrix(rho / np.trace(rho).real)


def equal_superposition(
    H: Hamiltonian, n_levels: int, rng: SeedLike
) -> DensityOperator:
    """Pure state with equal weight on ``n_levels`` randomly chosen levels.

    Its effective dimension is exactly ``n_levels``.
    """
    if not 1 <= n_levels <= H.n_levels:
        raise BadDimension(
            f"n_levels must be in [1, {H.n_levels}], got {n_levels}"
        )
    gen = make_rng(rng)
    chosen = gen.choice(H.n_levels, size=n_levels, replace=False)
    psi = np.zeros(H.dimension, dtype=np.complex128)
    for index in chosen:
        basis = H.levels[index].basis
        m = basis.shape[1]
        coords = gen.standard_normal(m) + 1j * gen.standard_normal(m)
        direction = basis @ coords
        psi += direction / np.linalg.norm(direction)
    return DensityOperator.from_vector(psi / np.sqrt(n_levels))


class SampledEstimate(NamedTuple):
    """Monte-Carlo time average with the standard error of the mean."""

    estimate: float
    stderr: float
    n_samples: int


def sample_mean(values: npt.ArrayLike) -> SampledEstimate:
    samples = np.asarray(values, dtype=float).reshape(-1)
    n = samples.size
    stderr = float(np.std(samples, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return SampledEstimate(float(np.mean(samples)), stderr, n)
