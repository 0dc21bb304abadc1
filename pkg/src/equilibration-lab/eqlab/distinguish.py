"""Finite-outcome POVMs and how well they tell two states apart."""

# Standard Library
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Tuple, Union

# Third Party
import numpy as np
import numpy.typing as npt
import scipy.linalg
from aws_lambda_powertools import Logger

# My Modules
from eqlab.rng import SeedLike, make_rng
from eqlab.exceptions import EmptySet, DegenerateGaps, DimensionMismatch
from eqlab.spectral import Hamiltonian, check_nondegenerate_gaps
from eqlab.equilibration import delta, sigma_sq_exact
from eqlab.matrixkit import (
    CMatrix,
    RVector,
    dagger,
    max_abs,
    as_cmatrix,
    trace_norm,
    eig_hermitian,
    hermitian_asymmetry,
)
from eqlab.dynamics import (
    DensityOperator,
    TimeAverageConvention,
    dephase,
    sample_mean,
    expectation_series,
    effective_dimension,
)

logger = Logger(service="eqlab", child=True)

POVM_TOLERANCE = 1e-9
# Probabilities below this are reported as exactly 0
PROBABILITY_FLOOR = 1e-15
HELSTROM_TIE = 1e-12

StateLike = Union[DensityOperator, npt.ArrayLike]


@dataclass(frozen=True, eq=False)
class Outcome:
    result: str
    operator: CMatrix


@dataclass(frozen=True, eq=False)
class POVM:
    """A measurement with finitely many outcomes.

    Parameters
    ----------
    label : str
        Name of the measurement.
    outcomes : Tuple[Outcome, ...]
        One positive operator per result label.
    """

    label: str
    outcomes: Tuple[Outcome, ...]

    @classmethod
    def from_operators(
        cls,
        operators: Sequence[npt.ArrayLike],
        label: str = "",
        results: Optional[Sequence[str]] = None,
    ) -> "POVM":
        names = (
            list(results)
            if results is not None
            else [str(r) for r in range(len(operators))]
        )
        if len(names) != len(operators):
            raise ValueError("One result label per operator is required")
        return cls(
            label=label,
            outcomes=tuple(
                Outcome(str(name), as_cmatrix(op, square=True))
                for name, op in zip(names, operators)
            ),
        )

    @classmethod
    def projective(
        cls, basis: npt.ArrayLike, label: str = "projective"
    ) -> "POVM":
        """Rank-one projectors onto the columns of an orthonormal basis."""
        vectors = as_cmatrix(basis)
        return cls.from_operators(
            [np.outer(v, v.conj()) for v in vectors.T], label=label
        )

    @property
    def dimension(self) -> int:
        return int(self.outcomes[0].operator.shape[0])

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    @property
    def results(self) -> Tuple[str, ...]:
        return tuple(o.result for o in self.outcomes)

    @property
    def operators(self) -> CMatrix:
        """Outcome operators stacked into shape ``(K, d, d)``."""
        return np.stack([o.operator for o in self.outcomes])


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """The measurements an observer can actually perform."""

    measurements: Tuple[POVM, ...]

    def __post_init__(self) -> None:
        if not self.measurements:
            raise EmptySet("A measurement set needs at least one POVM")
        dims = {m.dimension for m in self.measurements}
        if len(dims) > 1:
            raise DimensionMismatch(f"POVMs of mixed dimensions {dims}")

    @classmethod
    def of(cls, measurements: Iterable[POVM]) -> "MeasurementSet":
        return cls(tuple(measurements))

    @property
    def n_outcomes(self) -> int:
        """``N(M)``, the outcome count summed over all measurements."""
        return sum(m.n_outcomes for m in self.measurements)

    @property
    def dimension(self) -> int:
        return self.measurements[0].dimension

    def __iter__(self) -> Iterator[POVM]:
        return iter(self.measurements)

    def __len__(self) -> int:
        return len(self.measurements)


@dataclass(frozen=True)
class Violation:
    kind: str
    outcome: str
    magnitude: float


@dataclass(frozen=True)
class PovmValidation:
    ok: bool
    violations: Tuple[Violation, ...]


def validate_povm(P: POVM, tol: float = POVM_TOLERANCE) -> PovmValidation:
    """Report positivity and completeness violations with magnitudes.

    Raises
    ------
    DimensionMismatch
        If the outcome operators do not share one dimension.
    """
    shapes = {o.operator.shape for o in P.outcomes}
    if len(shapes) != 1:
        raise DimensionMismatch(f"POVM '{P.label}' mixes shapes {shapes}")

    violations = []
    for outcome in P.outcomes:
        asymmetry = hermitian_asymmetry(outcome.operator)
        if asymmetry > tol:
            violations.append(
                Violation("hermiticity", outcome.result, asymmetry)
            )
            continue
        hermitian = 0.5 * (outcome.operator + dagger(outcome.operator))
        lowest = float(np.linalg.eigvalsh(hermitian)[0])
        if lowest < -tol:
            violations.append(Violation("positivity", outcome.result, -lowest))

    completeness = max_abs(np.sum(P.operators, axis=0) - np.eye(P.dimension))
    if completeness > tol:
        violations.append(Violation("completeness", "*", completeness))
    if violations:
        logger.warning(
            f"POVM '{P.label}' has {len(violations)} violations",
            extra={"kinds": [v.kind for v in violations]},
        )
    return PovmValidation(ok=not violations, violations=tuple(violations))


def _state_matrix(state: StateLike) -> CMatrix:
    if isinstance(state, DensityOperator):
        return state.matrix
    return as_cmatrix(state, square=True)


def _clamp(probabilities: RVector) -> RVector:
    tiny = np.abs(probabilities) < PROBABILITY_FLOOR
    return np.where(tiny, 0.0, probabilities)


def outcome_probabilities(P: POVM, rho: StateLike) -> RVector:
    """``tr(M_r rho)`` for every outcome."""
    matrix = _state_matrix(rho)
    if matrix.shape[0] != P.dimension:
        raise DimensionMismatch(
            f"State of dimension {matrix.shape[0]} for POVM '{P.label}' of "
            f"dimension {P.dimension}"
        )
    values = np.real(np.einsum("kij,ji->k", P.operators, matrix))
    return _clamp(values)


def d_povm(P: POVM, rho1: StateLike, rho2: StateLike) -> float:
    """Distinguishability ``1/2 sum_r |tr(M_r rho1) - tr(M_r rho2)|``."""
    p1 = outcome_probabilities(P, rho1)
    p2 = outcome_probabilities(P, rho2)
    return float(0.5 * np.sum(np.abs(p1 - p2)))


def success_probability(P: POVM, rho1: StateLike, rho2: StateLike) -> float:
    """Best guessing probability between two equiprobable states."""
    return 0.5 * (1.0 + d_povm(P, rho1, rho2))


def d_set(
    S: Union[MeasurementSet, Sequence[POVM]],
    rho1: StateLike,
    rho2: StateLike,
) -> float:
    """Largest distinguishability over the members of ``S``.

    Raises
    ------
    EmptySet
        If ``S`` has no members.
    """
    members = list(S)
    if not members:
        raise EmptySet("Cannot maximize over an empty measurement set")
    return max(d_povm(P, rho1, rho2) for P in members)


def trace_distance(rho1: StateLike, rho2: StateLike) -> float:
    """``1/2 tr|rho1 - rho2|``."""
    a, b = _state_matrix(rho1), _state_matrix(rho2)
    if a.shape != b.shape:
        raise DimensionMismatch(f"States of shapes {a.shape} and {b.shape}")
    return 0.5 * trace_norm(a - b)


def helstrom_povm(rho1: StateLike, rho2: StateLike) -> POVM:
    """Two-outcome measurement achieving the trace distance.

    Outcome ``rho1`` projects onto the non-negative eigenspace of
    ``rho1 - rho2`` (zero eigenvalues included), ``rho2`` onto the rest.
    """
    a, b = _state_matrix(rho1), _state_matrix(rho2)
    if a.shape != b.shape:
        raise DimensionMismatch(f"States of shapes {a.shape} and {b.shape}")
    eigenvalues, eigenvectors = eig_hermitian(a - b)
    keep = eigenvalues >= -HELSTROM_TIE
    positive = eigenvectors[:, keep]
    negative = eigenvectors[:, ~keep]
    return POVM.from_operators(
        [positive @ dagger(positive), negative @ dagger(negative)],
        label="helstrom",
        results=["rho1", "rho2"],
    )


def simulate_guessing(
    P: POVM,
    rho1: StateLike,
    rho2: StateLike,
    n_trials: int,
    rng: SeedLike,
) -> float:
    """Play the guessing game ``n_trials`` times and return the hit rate.

    Each round picks one of the two states with probability 1/2, samples an
    outcome of ``P`` and guesses the state under which that outcome is
    more likely.
    """
    gen = make_rng(rng)
    p1 = np.clip(outcome_probabilities(P, rho1), 0.0, None)
    p2 = np.clip(outcome_probabilities(P, rho2), 0.0, None)
    p1, p2 = p1 / p1.sum(), p2 / p2.sum()
    truth = gen.integers(0, 2, n_trials)
    draws1 = gen.choice(P.n_outcomes, size=n_trials, p=p1)
    draws2 = gen.choice(P.n_outcomes, size=n_trials, p=p2)
    outcomes = np.where(truth == 0, draws1, draws2)
    guesses = np.where(p1[outcomes] >= p2[outcomes], 0, 1)
    return float(np.mean(guesses == truth))


def random_povm(
    d: int, n_outcomes: int, rng: SeedLike, label: str = "random"
) -> POVM:
    """Random POVM ``M_r = S^{-1/2} G_r G_r^dagger S^{-1/2}``, with
    ``G_r`` complex Gaussian and ``S = sum_r G_r G_r^dagger``."""
    gen = make_rng(rng)
    effects = []
    for _ in range(n_outcomes):
        G = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
        effects.append(G @ dagger(G))
    total = np.sum(effects, axis=0)
    root = scipy.linalg.fractional_matrix_power(total, -0.5)
    operators = []
    for effect in effects:
        op = root @ effect @ dagger(root)
        operators.append(0.5 * (op + dagger(op)))
    return POVM.from_operators(operators, label=label)


def distinguishability_series(
    S: MeasurementSet,
    H: Hamiltonian,
    rho0: DensityOperator,
    reference: StateLike,
    times: npt.ArrayLike,
) -> RVector:
    """``D_M(rho(t), reference)`` per measurement, shape ``(len(S), T)``.

    The set-level distinguishability at each time is the column maximum.
    """
    rows = []
    for P in S:
        series = _clamp(
            np.real(expectation_series(H, rho0, P.operators, times))
        )
        target = outcome_probabilities(P, reference)
        rows.append(0.5 * np.sum(np.abs(series - target), axis=1))
    return np.array(rows)


@dataclass(frozen=True)
class CorollaryReport:
    """Average distinguishability from equilibrium against its bounds.

    ``sum_of_averages`` and ``sqrt_sigma_sum`` are the intermediate steps
    between the empirical average and ``bound_weighted``.
    """

    bound_weighted: float
    bound_count: float
    empirical_avg: float
    stderr: float
    d_eff: float
    n_outcomes: int
    sum_of_averages: float
    sqrt_sigma_sum: float
    holds: bool


def corollary_report(
    S: MeasurementSet,
    H: Hamiltonian,
    rho0: DensityOperator,
    conv: TimeAverageConvention,
    delta_gap: Optional[float] = None,
) -> CorollaryReport:
    """Sample ``<D_S(rho(t), omega)>`` and compare with the outcome bounds.

    Raises
    ------
    DegenerateGaps
        If the gap check fails.
    """
    report = check_nondegenerate_gaps(H, delta_gap)
    if not report.passed:
        raise DegenerateGaps(report)

    d_eff = effective_dimension(H, rho0)
    scale = 4.0 * math.sqrt(d_eff)
    weighted = sum(delta(o.operator) for P in S for o in P.outcomes)
    bound_weighted = weighted / scale
    bound_count = S.n_outcomes / scale

    per_measurement = distinguishability_series(
        S, H, rho0, dephase(H, rho0), conv.sample_times()
    )
    estimate = sample_mean(per_measurement.max(axis=0))
    sqrt_sigma_sum = 0.5 * sum(
        math.sqrt(sigma_sq_exact(H, rho0, o.operator, delta_gap))
        for P in S
        for o in P.outcomes
    )

    holds = (
        estimate.estimate <= bound_weighted + 3.0 * estimate.stderr
        and bound_weighted <= bound_count + 1e-9
    )
    if not holds:
        logger.warning(
            "Distinguishability bound violated",
            extra={"empirical": estimate.estimate, "bound": bound_weighted},
        )
    return CorollaryReport(
        bound_weighted=bound_weighted,
        bound_count=bound_count,
        empirical_avg=estimate.estimate,
        stderr=estimate.stderr,
        d_eff=d_eff,
        n_outcomes=S.n_outcomes,
        sum_of_averages=float(np.sum(per_measurement.mean(axis=1))),
        sqrt_sigma_sum=sqrt_sigma_sum,
        holds=holds,
    )


def log10_corollary_bound(log10_outcomes: float, log10_d_eff: float) -> float:
    """``log10(N / (4 sqrt(d_eff)))`` for numbers too large for floats.

    With ``N = 10^40`` outcomes and ``d_eff = 10^(10^22)`` this gives
    about ``-5e21``.
    """
    return log10_outcomes - math.log10(4.0) - 0.5 * log10_d_eff
