"""Subspaces whose states all equilibrate to one common state.

Given ``H = (+)_k H_k`` with every projector ``Pi_k`` commuting with the
Hamiltonian, any state supported in ``H_k`` looks like
``Omega_k = Pi_k / tr(Pi_k)`` to a measurement set that barely separates
energy eigenstates of ``H_k``.
"""

# Standard Library
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

# Third Party
import numpy as np
import numpy.typing as npt
from aws_lambda_powertools import Logger

# My Modules
from eqlab.rng import SeedLike, make_rng
from eqlab.distinguish import (
    POVM,
    MeasurementSet,
    d_set,
    random_povm,
    distinguishability_series,
)
from eqlab.spectral import (
    Hamiltonian,
    relative_tolerance,
    check_nondegenerate_gaps,
)
from eqlab.matrixkit import (
    CMatrix,
    RVector,
    dagger,
    max_abs,
    as_cmatrix,
    commutator,
    eig_hermitian,
)
from eqlab.dynamics import (
    DensityOperator,
    TimeAverageConvention,
    dephase,
    sample_mean,
    effective_dimension,
)
from eqlab.exceptions import (
    EmptySet,
    EdgeOnLevel,
    NotEigenstates,
    DegenerateGaps,
    IndexOutOfRange,
    InvalidBandEdges,
    DimensionMismatch,
    BasisNotInSubspace,
    StateOutsideSubspace,
)

logger = Logger(service="eqlab", child=True)

PARTITION_TOLERANCE = 1e-9
SUPPORT_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class SubspacePartition:
    """Projectors ``Pi_k`` onto the subspaces of a direct sum."""

    projectors: Tuple[CMatrix, ...]
    labels: Tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.projectors:
            raise EmptySet("A partition needs at least one projector")
        if len(self.labels) != len(self.projectors):
            raise ValueError("One label per projector is required")

    @classmethod
    def from_projectors(
        cls,
        projectors: Sequence[npt.ArrayLike],
        labels: Optional[Sequence[str]] = None,
    ) -> "SubspacePartition":
        names = labels or [str(k) for k in range(len(projectors))]
        return cls(
            projectors=tuple(as_cmatrix(p, square=True) for p in projectors),
            labels=tuple(names),
        )

    @property
    def dimension(self) -> int:
        return int(self.projectors[0].shape[0])

    @property
    def ranks(self) -> Tuple[int, ...]:
        return tuple(int(round(np.trace(p).real)) for p in self.projectors)

    def __len__(self) -> int:
        return len(self.projectors)

    def measurement(self) -> POVM:
        """The coarse measurement asking which subspace the state is in."""
        return POVM.from_operators(
            self.projectors, label="partition", results=self.labels
        )


def perturbed_measurement(
    P: SubspacePartition, eta: float, rng: SeedLike
) -> POVM:
    """Partition measurement mixed with a random POVM of weight ``eta``.

    ``M_r = (1 - eta) Pi_r + eta R_r``, which is nearly constant on each
    subspace for small ``eta``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    noise = random_povm(P.dimension, len(P), rng)
    return POVM.from_operators(
        [
            (1.0 - eta) * proj + eta * op
            for proj, op in zip(P.projectors, noise.operators)
        ],
        label=f"partition~{eta:g}",
        results=P.labels,
    )


@dataclass(frozen=True)
class PartitionViolation:
    kind: str
    item: str
    magnitude: float


@dataclass(frozen=True)
class PartitionValidation:
    ok: bool
    violations: Tuple[PartitionViolation, ...]
    commutation: Tuple[float, ...]
    commutation_total: float


def validate_partition(
    H: Hamiltonian, P: SubspacePartition, tol: float = PARTITION_TOLERANCE
) -> PartitionValidation:
    """Check projector, orthogonality, completeness and commutation.

    Every problem is reported with its max-entry magnitude. The commutation
    magnitude ``||[Pi_k, H]||_max`` is reported for every projector.

    Raises
    ------
    DimensionMismatch
        If the partition and Hamiltonian dimensions differ.
    """
    if any(p.shape != (H.dimension, H.dimension) for p in P.projectors):
        raise DimensionMismatch(
            f"Partition projectors do not match dimension {H.dimension}"
        )
    violations: List[PartitionViolation] = []

    def flag(kind: str, item: str, magnitude: float) -> None:
        if magnitude > tol:
            violations.append(PartitionViolation(kind, item, magnitude))

    for label, proj in zip(P.labels, P.projectors):
        flag("hermiticity", label, max_abs(proj - dagger(proj)))
        flag("idempotence", label, max_abs(proj @ proj - proj))
    for a in range(len(P)):
        for b in range(a + 1, len(P)):
            overlap = max_abs(P.projectors[a] @ P.projectors[b])
            flag("orthogonality", f"{P.labels[a]},{P.labels[b]}", overlap)
    total = np.sum(P.projectors, axis=0)
    flag("completeness", "*", max_abs(total - np.eye(H.dimension)))

    commutation = tuple(
        max_abs(commutator(proj, H.matrix)) for proj in P.projectors
    )
    for label, magnitude in zip(P.labels, commutation):
        flag("commutation", label, magnitude)
    if violations:
        logger.warning(
            f"Partition has {len(violations)} violations",
            extra={"kinds": sorted({v.kind for v in violations})},
        )
    return PartitionValidation(
        ok=not violations,
        violations=tuple(violations),
        commutation=commutation,
        commutation_total=float(sum(commutation)),
    )


def microcanonical_partition(
    H: Hamiltonian,
    band_edges: Sequence[float],
    delta_deg: Optional[float] = None,
) -> SubspacePartition:
    """Group eigenprojectors into energy bands.

    The edges are cut points: band ``i`` holds levels between consecutive
    points of ``(-inf, *band_edges, +inf)``. Bands without levels are
    dropped; labels keep the position of the band among all intervals.

    Raises
    ------
    InvalidBandEdges
        If the edges are not finite and strictly ascending.
    EdgeOnLevel
        If an edge lies within ``delta_deg`` of a level energy.
    """
    edges = np.asarray(band_edges, dtype=float).reshape(-1)
    if not np.all(np.isfinite(edges)) or np.any(np.diff(edges) <= 0.0):
        raise InvalidBandEdges(
            f"Band edges must be finite and strictly ascending: {edges}"
        )
    energies = H.energies
    tol = delta_deg if delta_deg is not None else relative_tolerance(energies)
    if edges.size:
        closest = np.min(np.abs(energies[:, None] - edges[None, :]), axis=0)
        hits = np.flatnonzero(closest <= tol)
        if hits.size:
            raise EdgeOnLevel(
                f"Band edge {edges[hits[0]]} is within {tol:.3e} of a level"
            )

    bands = np.searchsorted(edges, energies)
    projectors, labels = [], []
    for band in np.unique(bands):
        members = np.flatnonzero(bands == band)
        projectors.append(sum(H.levels[n].projector for n in members))
        labels.append(f"band{band}")
    logger.debug(f"Split {H.n_levels} levels into {len(labels)} bands")
    return SubspacePartition(tuple(projectors), tuple(labels))


def _pure_probabilities(P: POVM, vectors: CMatrix) -> RVector:
    """``<v_n|M_r|v_n>`` with shape ``(n_vectors, n_outcomes)``."""
    return np.real(
        np.einsum("in,kij,jn->nk", vectors.conj(), P.operators, vectors)
    )


def _pairwise_distinguishability(
    S: MeasurementSet, vectors: CMatrix
) -> RVector:
    """``D_S(|i><i|, |j><j|)`` for every pair of columns."""
    n = vectors.shape[1]
    table = np.zeros((n, n))
    for P in S:
        probs = _pure_probabilities(P, vectors)
        pairs = 0.5 * np.sum(
            np.abs(probs[:, None, :] - probs[None, :, :]), axis=-1
        )
        table = np.maximum(table, pairs)
    return table


def eigenstate_epsilon(
    S: MeasurementSet,
    H: Hamiltonian,
    projector: npt.ArrayLike,
    basis: npt.ArrayLike,
    tol: float = PARTITION_TOLERANCE,
) -> float:
    """Largest ``D_S`` between two supplied eigenstates of a subspace.

    Parameters
    ----------
    S : MeasurementSet
        The available measurements.
    H : Hamiltonian
        The Hamiltonian.
    projector : npt.ArrayLike
        ``Pi_k``.
    basis : npt.ArrayLike
        Energy eigenstates in the range of ``Pi_k`` as columns.
    tol : float, optional
        Membership and eigen-equation tolerance, by default 1e-9

    Returns
    -------
    float
        The maximum over pairs, 0 for fewer than two vectors.

    Raises
    ------
    BasisNotInSubspace
        If a column has a component outside the range of ``Pi_k``.
    NotEigenstates
        If a column is not an energy eigenstate.
    """
    proj = as_cmatrix(projector, square=True)
    vectors = as_cmatrix(basis)
    leak = np.linalg.norm(proj @ vectors - vectors, axis=0)
    if leak.size and leak.max() > tol:
        raise BasisNotInSubspace(
            f"Basis vector {int(leak.argmax())} leaves the subspace by "
            f"{leak.max():.3e}"
        )
    applied = H.matrix @ vectors
    rayleigh = np.einsum("in,in->n", vectors.conj(), applied)
    residual = np.linalg.norm(applied - vectors * rayleigh, axis=0)
    scale = max(1.0, float(np.max(np.abs(H.energies))))
    if residual.size and residual.max() > tol * scale:
        raise NotEigenstates(
            f"Basis vector {int(residual.argmax())} has eigen-residual "
            f"{residual.max():.3e}"
        )
    if vectors.shape[1] < 2:
        return 0.0
    return float(np.max(_pairwise_distinguishability(S, vectors)))


def equilibrium_state(P: SubspacePartition, k: int) -> DensityOperator:
    """``Omega_k = Pi_k / tr(Pi_k)``."""
    if not 0 <= k < len(P):
        raise IndexOutOfRange(f"Subspace {k} of a {len(P)}-part partition")
    proj = P.projectors[k]
    return DensityOperator.from_matrix(proj / np.trace(proj).real)


def _range_basis(projector: CMatrix) -> CMatrix:
    eigenvalues, eigenvectors = eig_hermitian(projector, 1e-8)
    return eigenvectors[:, eigenvalues > 0.5]


def state_in_subspace(
    projector: npt.ArrayLike, rng: SeedLike
) -> DensityOperator:
    """Haar-random pure state in the range of a projector."""
    gen = make_rng(rng)
    basis = _range_basis(as_cmatrix(projector, square=True))
    m = basis.shape[1]
    if m == 0:
        raise EmptySet("Projector has empty range")
    coords = gen.standard_normal(m) + 1j * gen.standard_normal(m)
    psi = basis @ coords
    return DensityOperator.from_vector(psi / np.linalg.norm(psi))


def _dephased_basis(
    H: Hamiltonian, omega: DensityOperator, projector: CMatrix
) -> Tuple[CMatrix, RVector]:
    """Eigenbasis of ``omega`` inside ``range(Pi_k)`` built from energy
    eigenstates, with the matching weights ``<i|omega|i>``."""
    vectors, weights = [], []
    for level in H.levels:
        block = projector @ level.projector
        block = 0.5 * (block + dagger(block))
        R = _range_basis(block)
        if R.shape[1] == 0:
            continue
        values, U = eig_hermitian(dagger(R) @ omega.matrix @ R, 1e-8)
        vectors.append(R @ U)
        weights.append(np.clip(values, 0.0, None))
    return np.hstack(vectors), np.concatenate(weights)


@dataclass(frozen=True)
class UniversalityReport:
    """Distinguishability from ``Omega_k`` against ``N/(4 sqrt(d_eff)) + eps``.

    ``avg_to_omega``, ``omega_to_omega_k`` and ``mixing_term`` are the
    intermediate quantities of the triangle and convexity steps.
    """

    epsilon: float
    bound: float
    empirical_avg: float
    stderr: float
    omega_k: DensityOperator = field(repr=False)
    d_eff: float
    avg_to_omega: float
    avg_to_omega_stderr: float
    omega_to_omega_k: float
    mixing_term: float
    holds: bool


def universality_report(
    S: MeasurementSet,
    H: Hamiltonian,
    rho0: DensityOperator,
    P: SubspacePartition,
    k: int,
    conv: TimeAverageConvention,
    delta_gap: Optional[float] = None,
) -> UniversalityReport:
    """Sample ``<D_S(rho(t), Omega_k)>`` and compare with its bound.

    ``epsilon`` is taken over the eigenbasis of ``omega`` inside
    ``H_k``, which is what the triangle and convexity steps consume.

    Raises
    ------
    IndexOutOfRange
        If ``k`` does not name a subspace.
    StateOutsideSubspace
        If ``tr(Pi_k rho0) < 1 - 1e-9``.
    DegenerateGaps
        If the gap check fails.
    """
    omega_k = equilibrium_state(P, k)
    proj = P.projectors[k]
    if rho0.dimension != proj.shape[0] or H.dimension != proj.shape[0]:
        raise DimensionMismatch(
            f"Hamiltonian {H.dimension}, state {rho0.dimension}, "
            f"partition {proj.shape[0]}"
        )
    support = float(np.real(np.trace(proj @ rho0.matrix)))
    if support < 1.0 - SUPPORT_TOLERANCE:
        raise StateOutsideSubspace(
            f"Initial state has weight {support:.12f} in subspace "
            f"{P.labels[k]}"
        )
    gaps = check_nondegenerate_gaps(H, delta_gap)
    if not gaps.passed:
        raise DegenerateGaps(gaps)

    omega = dephase(H, rho0)
    vectors, weights = _dephased_basis(H, omega, proj)
    pairs = _pairwise_distinguishability(S, vectors)
    epsilon = float(np.max(pairs)) if vectors.shape[1] > 1 else 0.0
    mixing = float(weights @ pairs.sum(axis=1) / np.trace(proj).real)

    d_eff = effective_dimension(H, rho0)
    bound = S.n_outcomes / (4.0 * math.sqrt(d_eff)) + epsilon

    times = conv.sample_times()
    to_omega_k = distinguishability_series(S, H, rho0, omega_k, times)
    to_omega = distinguishability_series(S, H, rho0, omega, times)
    estimate = sample_mean(to_omega_k.max(axis=0))
    via_omega = sample_mean(to_omega.max(axis=0))

    holds = estimate.estimate <= bound + 3.0 * estimate.stderr
    if not holds:
        logger.warning(
            "Universality bound violated",
            extra={"empirical": estimate.estimate, "bound": bound},
        )
    return UniversalityReport(
        epsilon=epsilon,
        bound=bound,
        empirical_avg=estimate.estimate,
        stderr=estimate.stderr,
        omega_k=omega_k,
        d_eff=d_eff,
        avg_to_omega=via_omega.estimate,
        avg_to_omega_stderr=via_omega.stderr,
        omega_to_omega_k=d_set(S, omega, omega_k),
        mixing_term=mixing,
        holds=holds,
    )
