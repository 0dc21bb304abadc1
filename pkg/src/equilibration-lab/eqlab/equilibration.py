"""Fluctuations of expectation values around their time average.

For a Hamiltonian with non-degenerate energy gaps and any operator ``A``,

    sigma_A^2 = <|tr(A rho(t)) - tr(A omega)|^2>
              <= Delta(A)^2 / (4 d_eff) <= ||A||^2 / d_eff.

The closed form is evaluated in the adapted eigenbasis of a pure state;
mixed states are purified first and ``A`` is lifted to ``A (x) I``.
"""

# Standard Library
from dataclasses import dataclass
from typing import NamedTuple, Optional

# Third Party
import numpy as np
import numpy.typing as npt
import scipy.optimize
from aws_lambda_powertools import Logger

# My Modules
from eqlab.exceptions import DegenerateGaps, DimensionMismatch
from eqlab.matrixkit import (
    SIGMA_X,
    SIGMA_Z,
    CMatrix,
    RVector,
    ket,
    dagger,
    tensor,
    as_cmatrix,
    is_hermitian,
    operator_norm,
    require_hermitian,
)
from eqlab.spectral import (
    Hamiltonian,
    build_hamiltonian,
    adapted_eigenbasis,
    check_nondegenerate_gaps,
)
from eqlab.dynamics import (
    DensityOperator,
    SampledEstimate,
    TimeAverageConvention,
    purify,
    dephase,
    sample_mean,
    level_populations,
    expectation_series,
    effective_dimension,
)

logger = Logger(service="eqlab", child=True)

DELTA_TOLERANCE = 1e-8
MAX_DESCENT_SWEEPS = 200
BOUND_SLACK = 1e-9


def delta(A: npt.ArrayLike) -> float:
    """``Delta(A) = 2 min_c ||A - c I||`` over complex ``c``.

    Hermitian ``A`` gives its eigenvalue range directly. Otherwise the
    convex function ``(Re c, Im c) -> ||A - c I||`` is minimized by
    coordinate-wise bounded scalar searches from ``c0 = tr(A)/d`` followed
    by a Nelder-Mead polish. The smallest evaluated norm is returned, and
    ``c = 0`` is always among the candidates, so ``Delta(A) <= 2 ||A||``.

    Raises
    ------
    NonSquare
        If ``A`` is not square.
    """
    arr = as_cmatrix(A, square=True)
    if is_hermitian(arr):
        eigenvalues = np.linalg.eigvalsh(require_hermitian(arr))
        return float(eigenvalues[-1] - eigenvalues[0])

    identity = np.eye(arr.shape[0])

    def shifted_norm(x: float, y: float) -> float:
        return operator_norm(arr - complex(x, y) * identity)

    # Any minimizer satisfies |c| <= 2 ||A||
    radius = 2.0 * operator_norm(arr) + DELTA_TOLERANCE
    c0 = complex(np.trace(arr)) / arr.shape[0]
    x, y = c0.real, c0.imag
    options = {"xatol": DELTA_TOLERANCE}
    for sweep in range(MAX_DESCENT_SWEEPS):
        x_new = scipy.optimize.minimize_scalar(
            lambda u: shifted_norm(u, y),
            bounds=(-radius, radius),
            method="bounded",
            options=options,
        ).x
        y_new = scipy.optimize.minimize_scalar(
            lambda v: shifted_norm(x_new, v),
            bounds=(-radius, radius),
            method="bounded",
            options=options,
        ).x
        step = abs(x_new - x) + abs(y_new - y)
        x, y = x_new, y_new
        if step < DELTA_TOLERANCE:
            break
    else:
        logger.warning(
            f"Coordinate descent for Delta(A) hit {MAX_DESCENT_SWEEPS} sweeps"
        )

    polish = scipy.optimize.minimize(
        lambda c: shifted_norm(c[0], c[1]),
        x0=np.array([x, y]),
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-12},
    )
    best = min(shifted_norm(x, y), float(polish.fun), shifted_norm(0.0, 0.0))
    logger.debug(f"Delta(A) minimization finished after {sweep + 1} sweeps")
    return 2.0 * best


@dataclass(frozen=True, eq=False)
class _AdaptedFrame:
    """Adapted basis vectors of a (possibly purified) pure state.

    ``ancilla`` is the trailing factor dimension that ``A`` is lifted over;
    it is 1 on the direct pure-state path.
    """

    vectors: CMatrix
    weights: RVector
    ancilla: int

    def apply(self, A: CMatrix) -> CMatrix:
        """``(A (x) I) |n>`` for every column ``|n>``."""
        d, n = A.shape[0], self.vectors.shape[1]
        blocks = self.vectors.reshape(d, self.ancilla, n)
        return np.einsum("ij,jan->ian", A, blocks).reshape(-1, n)


def _adapted_frame(H: Hamiltonian, rho0: DensityOperator) -> _AdaptedFrame:
    if rho0.vector is not None:
        basis = adapted_eigenbasis(H, rho0.vector)
        return _AdaptedFrame(basis.vectors, basis.amplitudes**2, 1)
    purified = purify(rho0)
    basis = adapted_eigenbasis(
        purified.lift_hamiltonian(H), purified.vector
    )
    return _AdaptedFrame(
        basis.vectors, basis.amplitudes**2, purified.ancilla_dim
    )


def _prepare(
    H: Hamiltonian,
    rho0: DensityOperator,
    A: npt.ArrayLike,
    delta_gap: Optional[float],
) -> CMatrix:
    arr = as_cmatrix(A, square=True)
    if arr.shape[0] != H.dimension or rho0.dimension != H.dimension:
        raise DimensionMismatch(
            f"Hamiltonian {H.dimension}, state {rho0.dimension}, "
            f"operator {arr.shape[0]}"
        )
    report = check_nondegenerate_gaps(H, delta_gap)
    if not report.passed:
        raise DegenerateGaps(report)
    return arr


def sigma_sq_exact(
    H: Hamiltonian,
    rho0: DensityOperator,
    A: npt.ArrayLike,
    delta_gap: Optional[float] = None,
) -> float:
    """Closed-form infinite-time variance of ``tr(A rho(t))``.

    ``sigma^2 = sum_{n != m} |c_n|^2 |c_m|^2 |<m|A|n>|^2`` in the adapted
    eigenbasis. Mixed states are purified and evaluated on ``A (x) I``.

    Parameters
    ----------
    H : Hamiltonian
        Hamiltonian with non-degenerate energy gaps.
    rho0 : DensityOperator
        Initial state.
    A : npt.ArrayLike
        Any square operator; Hermiticity is not required.
    delta_gap : Optional[float], optional
        Tolerance forwarded to the gap check, by default None

    Returns
    -------
    float
        The variance, clipped at 0.

    Raises
    ------
    DegenerateGaps
        If the gap check fails; the closed form does not apply then.
    DimensionMismatch
        If operand dimensions differ.
    """
    arr = _prepare(H, rho0, A, delta_gap)
    frame = _adapted_frame(H, rho0)
    elements = np.abs(dagger(frame.vectors) @ frame.apply(arr)) ** 2
    w = frame.weights
    value = float(w @ elements @ w - np.sum(w**2 * np.diag(elements)))
    return max(value, 0.0)


@dataclass(frozen=True)
class ProofChain:
    """Successive upper bounds in the variance proof, in order."""

    closed_form: float
    dephased_overlap: float
    cauchy_schwarz: float
    norm_purity: float
    norm_over_d_eff: float

    def is_monotone(self, slack: float = BOUND_SLACK) -> bool:
        values = [
            self.closed_form,
            self.dephased_overlap,
            self.cauchy_schwarz,
            self.norm_purity,
        ]
        return all(a <= b + slack for a, b in zip(values, values[1:]))


def theorem1_chain(
    H: Hamiltonian,
    rho0: DensityOperator,
    A: npt.ArrayLike,
    delta_gap: Optional[float] = None,
) -> ProofChain:
    """Evaluate each step of the variance bound for one instance.

    The time-averaged state of the (purified) pure state is
    ``omega = sum_n |c_n|^2 |n><n|``, which makes every trace below a
    weighted sum over the adapted basis.
    """
    arr = _prepare(H, rho0, A, delta_gap)
    frame = _adapted_frame(H, rho0)
    w = frame.weights
    applied = frame.apply(arr)
    applied_dagger = frame.apply(dagger(arr))
    elements = np.abs(dagger(frame.vectors) @ applied) ** 2
    overlap = float(w @ elements @ w)
    closed = max(overlap - float(np.sum(w**2 * np.diag(elements))), 0.0)
    left = float(np.sum(w**2 * np.sum(np.abs(applied) ** 2, axis=0)))
    right = float(np.sum(w**2 * np.sum(np.abs(applied_dagger) ** 2, axis=0)))
    norm_sq = operator_norm(arr) ** 2
    purity = float(np.sum(w**2))
    return ProofChain(
        closed_form=closed,
        dephased_overlap=overlap,
        cauchy_schwarz=float(np.sqrt(left * right)),
        norm_purity=norm_sq * purity,
        norm_over_d_eff=norm_sq / effective_dimension(H, rho0),
    )


def sigma_sq_sampled(
    H: Hamiltonian,
    rho0: DensityOperator,
    A: npt.ArrayLike,
    conv: TimeAverageConvention,
) -> SampledEstimate:
    """Monte-Carlo estimate of ``<|tr(A rho(t)) - tr(A omega)|^2>``.

    Valid for any Hamiltonian, including gap-degenerate ones.
    """
    arr = as_cmatrix(A, square=True)
    reference = dephase(H, rho0).expectation(arr)
    series = expectation_series(H, rho0, arr, conv.sample_times())
    return sample_mean(np.abs(series - reference) ** 2)


@dataclass(frozen=True)
class Theorem1Report:
    sigma_sq: float
    bound_delta: float
    bound_norm: float
    reimann_purity_bound: float
    reimann_occupation_bound: float
    d_eff: float
    delta: float
    norm: float
    purity: float
    tight: bool
    reimann_purity_violated: bool
    chain_holds: bool


def theorem1_report(
    H: Hamiltonian,
    rho0: DensityOperator,
    A: npt.ArrayLike,
    delta_gap: Optional[float] = None,
) -> Theorem1Report:
    """Compare the exact variance with every bound on it.

    Raises
    ------
    DegenerateGaps
        If the gap check fails.
    """
    sigma_sq = sigma_sq_exact(H, rho0, A, delta_gap)
    arr = as_cmatrix(A, square=True)
    spread = delta(arr)
    norm = operator_norm(arr)
    populations = level_populations(H, rho0)
    d_eff = float(1.0 / np.sum(populations**2))
    purity = dephase(H, rho0).purity()

    bound_delta = spread**2 / (4.0 * d_eff)
    bound_norm = norm**2 / d_eff
    reimann_purity = spread**2 * purity
    report = Theorem1Report(
        sigma_sq=sigma_sq,
        bound_delta=bound_delta,
        bound_norm=bound_norm,
        reimann_purity_bound=reimann_purity,
        reimann_occupation_bound=spread**2 * float(np.max(populations)),
        d_eff=d_eff,
        delta=spread,
        norm=norm,
        purity=purity,
        tight=abs(sigma_sq - bound_delta) <= BOUND_SLACK,
        reimann_purity_violated=sigma_sq > reimann_purity + BOUND_SLACK,
        chain_holds=(
            sigma_sq <= bound_delta + BOUND_SLACK
            and bound_delta <= bound_norm + BOUND_SLACK
        ),
    )
    if not report.chain_holds:
        logger.warning("Variance bound chain violated", extra=report.__dict__)
    return report


class Counterexample(NamedTuple):
    hamiltonian: Hamiltonian
    state: DensityOperator
    observable: CMatrix


def reimann_counterexample(k: int) -> Counterexample:
    """Degenerate-Hamiltonian instance where the purity bound fails.

    A qubit next to a ``k``-dimensional system with
    ``H = sigma_x (x) I``, ``rho0 = |0><0| (x) I / k`` and
    ``A = sigma_z (x) I``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    identity = np.eye(k)
    H = build_hamiltonian(tensor(SIGMA_X, identity))
    rho0 = DensityOperator.from_matrix(
        tensor(np.outer(ket(0, 2), ket(0, 2)), identity / k)
    )
    return Counterexample(H, rho0, tensor(SIGMA_Z, identity))
