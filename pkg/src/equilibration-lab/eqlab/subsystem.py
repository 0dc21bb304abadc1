"""Small subsystems of a bipartite system ``H_S (x) H_B``.

The subsystem is always the leading tensor factor. Reduced-state
differences are expanded in the Schwinger operator basis

    F_{d k0 + k1} = X^k1 Z^k0 / sqrt(d),

with ``X|l> = |l+1 mod d>`` and ``Z|l> = exp(2 pi i l / d)|l>`` on the
computational basis.
"""

# Standard Library
import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

# Third Party
import numpy as np
import numpy.typing as npt
from aws_lambda_powertools import Logger

# My Modules
from eqlab.exceptions import BadDimension, DegenerateGaps, DimensionMismatch
from eqlab.equilibration import BOUND_SLACK, sigma_sq_exact
from eqlab.spectral import Hamiltonian, check_nondegenerate_gaps
from eqlab.matrixkit import (
    CMatrix,
    RVector,
    dagger,
    tensor,
    max_abs,
    as_cmatrix,
    partial_trace,
)
from eqlab.dynamics import (
    DensityOperator,
    SampledEstimate,
    TimeAverageConvention,
    dephase,
    time_chunks,
    sample_mean,
    evolve_batch,
    expectation_series,
    effective_dimension,
)

logger = Logger(service="eqlab", child=True)


@dataclass(frozen=True)
class BipartiteSplit:
    """Dimensions of the subsystem ``S`` and the bath ``B``."""

    d_S: int
    d_B: int

    def __post_init__(self) -> None:
        if self.d_S < 2:
            raise BadDimension(f"Subsystem dimension must be >= 2: {self.d_S}")
        if self.d_B < 1:
            raise BadDimension(f"Bath dimension must be >= 1: {self.d_B}")

    @property
    def dimension(self) -> int:
        return self.d_S * self.d_B

    def require(self, d: int) -> None:
        """Raise DimensionMismatch unless ``d = d_S * d_B``."""
        if d != self.dimension:
            raise DimensionMismatch(
                f"Split {self.d_S} x {self.d_B} does not match dimension {d}"
            )


@dataclass(frozen=True, eq=False)
class SchwingerBasis:
    d_S: int
    operators: CMatrix

    def __len__(self) -> int:
        return int(self.operators.shape[0])

    def __getitem__(self, k: int) -> CMatrix:
        return self.operators[k]

    def gram(self) -> CMatrix:
        """``G[l, k] = tr(F_l^dagger F_k)``."""
        return np.einsum("lij,kij->lk", self.operators.conj(), self.operators)

    def unitarity_error(self) -> float:
        """Largest deviation of ``sqrt(d_S) F_k`` from a unitary."""
        scaled = math.sqrt(self.d_S) * self.operators
        products = scaled @ np.swapaxes(scaled.conj(), -1, -2)
        return max_abs(products - np.eye(self.d_S))

    def lifted(self, d_B: int) -> CMatrix:
        """``F_k^dagger (x) I_B`` for every ``k``, shape ``(d_S^2, d, d)``."""
        identity = np.eye(d_B)
        return np.stack([tensor(dagger(F), identity) for F in self.operators])


def schwinger_basis(d_S: int) -> SchwingerBasis:
    """Orthonormal operator basis of ``d_S^2`` scaled unitaries.

    Raises
    ------
    BadDimension
        If ``d_S < 2``.
    """
    if not isinstance(d_S, (int, np.integer)) or d_S < 2:
        raise BadDimension(
            f"Subsystem dimension must be an integer >= 2: {d_S}"
        )
    shift = np.roll(np.eye(d_S, dtype=np.complex128), 1, axis=0)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d_S) / d_S))
    operators = np.stack(
        [
            np.linalg.matrix_power(shift, k1)
            @ np.linalg.matrix_power(clock, k0)
            / math.sqrt(d_S)
            for k0 in range(d_S)
            for k1 in range(d_S)
        ]
    )
    return SchwingerBasis(d_S=int(d_S), operators=operators)


def expand_in_basis(M: npt.ArrayLike, B: SchwingerBasis) -> npt.NDArray:
    """Coefficients ``lambda_k = tr(F_k^dagger M)``."""
    arr = as_cmatrix(M, square=True)
    if arr.shape[0] != B.d_S:
        raise DimensionMismatch(
            f"Operator of dimension {arr.shape[0]} for a basis on {B.d_S}"
        )
    return np.einsum("kij,ij->k", B.operators.conj(), arr)


def reconstruct(coefficients: npt.ArrayLike, B: SchwingerBasis) -> CMatrix:
    """``sum_k lambda_k F_k``."""
    lam = np.asarray(coefficients, dtype=np.complex128)
    if lam.shape != (len(B),):
        raise DimensionMismatch(
            f"{lam.shape} coefficients for a basis of {len(B)} operators"
        )
    return np.einsum("k,kij->ij", lam, B.operators)


def reduced_state(
    rho: Union[DensityOperator, npt.ArrayLike], split: BipartiteSplit
) -> CMatrix:
    """``tr_B(rho)``."""
    matrix = rho.matrix if isinstance(rho, DensityOperator) else rho
    return partial_trace(matrix, split.d_S, split.d_B, keep="S")


def ambient_coefficients(
    H: Hamiltonian,
    rho0: DensityOperator,
    split: BipartiteSplit,
    times: npt.ArrayLike,
    B: Optional[SchwingerBasis] = None,
) -> npt.NDArray[np.complex128]:
    """``lambda_k(t) = tr((rho(t) - omega) (F_k^dagger (x) I))``.

    Evaluated on the full space, shape ``(T, d_S^2)``.
    """
    split.require(H.dimension)
    basis = B if B is not None else schwinger_basis(split.d_S)
    lifted = basis.lifted(split.d_B)
    omega = dephase(H, rho0)
    reference = np.einsum("kij,ji->k", lifted, omega.matrix)
    return expectation_series(H, rho0, lifted, times) - reference


def subsystem_bound(
    H: Hamiltonian,
    rho0: DensityOperator,
    split: BipartiteSplit,
    delta_gap: Optional[float] = None,
) -> float:
    """``1/2 sqrt(d_S^2 / d_eff)``.

    Raises
    ------
    DegenerateGaps
        If the gap check fails.
    DimensionMismatch
        If the split does not match the Hamiltonian.
    """
    split.require(H.dimension)
    report = check_nondegenerate_gaps(H, delta_gap)
    if not report.passed:
        raise DegenerateGaps(report)
    d_eff = effective_dimension(H, rho0)
    return 0.5 * math.sqrt(split.d_S**2 / d_eff)


def distance_series(
    H: Hamiltonian,
    rho0: DensityOperator,
    split: BipartiteSplit,
    times: npt.ArrayLike,
) -> RVector:
    """``D(rho_S(t), omega_S)`` at each time."""
    split.require(H.dimension)
    omega_S = reduced_state(dephase(H, rho0), split)
    chunks = []
    for chunk in time_chunks(times):
        diff = reduced_state(evolve_batch(H, rho0, chunk), split) - omega_S
        diff = 0.5 * (diff + np.swapaxes(diff.conj(), -1, -2))
        eigenvalues = np.linalg.eigvalsh(diff)
        chunks.append(0.5 * np.sum(np.abs(eigenvalues), axis=-1))
    return np.concatenate(chunks)


def avg_subsystem_distance(
    H: Hamiltonian,
    rho0: DensityOperator,
    split: BipartiteSplit,
    conv: TimeAverageConvention,
) -> SampledEstimate:
    """Sampled ``<D(rho_S(t), omega_S)>``; works without the gap condition."""
    split.require(H.dimension)
    return sample_mean(distance_series(H, rho0, split, conv.sample_times()))


@dataclass(frozen=True)
class SubsystemChain:
    """The steps from the sampled subsystem distance to its bound.

    ``sampled_two_norm`` uses sampled coefficient variances,
    ``exact_two_norm`` the closed-form ones for ``F_k^dagger (x) I``.
    """

    distance: float
    stderr: float
    sampled_two_norm: float
    exact_two_norm: float
    bound: float
    d_eff: float
    sampled_variances: Tuple[float, ...]
    exact_variances: Tuple[float, ...]
    holds: bool


def subsystem_chain(
    H: Hamiltonian,
    rho0: DensityOperator,
    split: BipartiteSplit,
    conv: TimeAverageConvention,
    delta_gap: Optional[float] = None,
) -> SubsystemChain:
    """Evaluate every step of the subsystem bound on one instance.

    Raises
    ------
    DegenerateGaps
        If the gap check fails.
    """
    bound = subsystem_bound(H, rho0, split, delta_gap)
    basis = schwinger_basis(split.d_S)
    times = conv.sample_times()

    estimate = sample_mean(distance_series(H, rho0, split, times))
    lam = ambient_coefficients(H, rho0, split, times, basis)
    sampled = np.mean(np.abs(lam) ** 2, axis=0)
    exact = np.array(
        [
            sigma_sq_exact(H, rho0, op, delta_gap)
            for op in basis.lifted(split.d_B)
        ]
    )
    sampled_two_norm = 0.5 * math.sqrt(split.d_S * float(np.sum(sampled)))
    exact_two_norm = 0.5 * math.sqrt(split.d_S * float(np.sum(exact)))
    holds = (
        estimate.estimate <= sampled_two_norm + 3.0 * estimate.stderr
        and exact_two_norm <= bound + BOUND_SLACK
    )
    logger.debug(
        f"Subsystem chain: {estimate.estimate:.4g} <= "
        f"{sampled_two_norm:.4g} ~ {exact_two_norm:.4g} <= {bound:.4g}"
    )
    return SubsystemChain(
        distance=estimate.estimate,
        stderr=estimate.stderr,
        sampled_two_norm=sampled_two_norm,
        exact_two_norm=exact_two_norm,
        bound=bound,
        d_eff=effective_dimension(H, rho0),
        sampled_variances=tuple(float(v) for v in sampled),
        exact_variances=tuple(float(v) for v in exact),
        holds=holds,
    )
