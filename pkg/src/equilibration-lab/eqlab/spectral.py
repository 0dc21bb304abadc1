"""Hamiltonians grouped into distinct energy levels.

Energies are in inverse time units (hbar = 1). A Hamiltonian is stored as
its levels; the dense matrix is rebuilt on demand.
"""

# Standard Library
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Literal, Optional, Tuple

# Third Party
import numpy as np
import numpy.typing as npt
from aws_lambda_powertools import Logger

# My Modules
from eqlab.rng import SeedLike, make_rng
from eqlab.matrixkit import (
    CMatrix,
    RVector,
    dagger,
    max_abs,
    tensor,
    as_cmatrix,
    as_cvector,
    eig_hermitian,
)
from eqlab.exceptions import (
    BadDimension,
    InvalidState,
    TooManyLevels,
    NotOrthonormal,
    ExhaustedRetries,
    DimensionMismatch,
    AmbiguousClustering,
)

logger = Logger(service="eqlab", child=True)

# Relative to the spectral range
DEFAULT_RELATIVE_TOLERANCE = 1e-8
# Occupations below this are treated as empty
TAU_OCC = 1e-12
MAX_GAP_LEVELS = 64
NORM_TOLERANCE = 1e-9

Ensemble = Literal["gue", "spaced-spectrum"]


def relative_tolerance(
    energies: npt.ArrayLike, factor: float = DEFAULT_RELATIVE_TOLERANCE
) -> float:
    """``factor`` times the spread of ``energies``.

    A flat spectrum falls back to its magnitude, and an all-zero one to 1.
    """
    values = np.asarray(energies, dtype=float)
    scale = float(np.ptp(values)) if values.size else 0.0
    if scale == 0.0:
        scale = float(np.max(np.abs(values))) if values.size else 0.0
    return factor * (scale if scale > 0.0 else 1.0)


@dataclass(frozen=True, eq=False)
class EnergyLevel:
    """One distinct energy and an orthonormal basis of its eigenspace."""

    energy: float
    basis: CMatrix

    @property
    def multiplicity(self) -> int:
        return int(self.basis.shape[1])

    @cached_property
    def projector(self) -> CMatrix:
        return self.basis @ dagger(self.basis)


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """A Hamiltonian ``H = sum_n E_n P_n`` with strictly increasing ``E_n``.

    Parameters
    ----------
    levels : Tuple[EnergyLevel, ...]
        Distinct levels in ascending energy order.
    dimension : int
        Hilbert space dimension.
    """

    levels: Tuple[EnergyLevel, ...]
    dimension: int

    @property
    def energies(self) -> RVector:
        return np.array([level.energy for level in self.levels])

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def projectors(self) -> List[CMatrix]:
        return [level.projector for level in self.levels]

    @cached_property
    def eigenvectors(self) -> CMatrix:
        """All level bases side by side; a unitary ``d x d`` matrix."""
        return np.hstack([level.basis for level in self.levels])

    @cached_property
    def eigenvalues(self) -> RVector:
        """Level energy of each column of ``eigenvectors``."""
        return np.concatenate(
            [np.full(lvl.multiplicity, lvl.energy) for lvl in self.levels]
        )

    @cached_property
    def matrix(self) -> CMatrix:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ dagger(V)

    @property
    def spectral_range(self) -> float:
        return float(self.energies[-1] - self.energies[0])

    def min_gap(self) -> Optional[float]:
        """Smallest nonzero energy difference, None for a single level."""
        if self.n_levels < 2:
            return None
        return float(np.min(np.diff(self.energies)))

    def completeness_error(self) -> float:
        total = sum(self.projectors)
        return max_abs(total - np.eye(self.dimension))

    def tensor_identity(self, dim: int) -> "Hamiltonian":
        """The lifted Hamiltonian ``H (x) I_dim``.

        Energies are unchanged; multiplicities grow by ``dim``, so the gap
        structure is preserved.
        """
        identity = np.eye(dim, dtype=complex)
        lifted = tuple(
            EnergyLevel(level.energy, tensor(level.basis, identity))
            for level in self.levels
        )
        return Hamiltonian(levels=lifted, dimension=self.dimension * dim)


def _cluster_levels(
    eigenvalues: RVector, eigenvectors: CMatrix, delta_deg: float
) -> Tuple[EnergyLevel, ...]:
    cuts = np.flatnonzero(np.diff(eigenvalues) > delta_deg) + 1
    levels = []
    for group in np.split(np.arange(eigenvalues.size), cuts):
        values = eigenvalues[group]
        span = float(values[-1] - values[0])
        if span > 10.0 * delta_deg:
            raise AmbiguousClustering(
                f"Near-degenerate chain of {group.size} eigenvalues spans "
                f"{span:.3e} > 10 * delta_deg = {10.0 * delta_deg:.3e}"
            )
        levels.append(
            EnergyLevel(float(np.mean(values)), eigenvectors[:, group])
        )
    return tuple(levels)


def build_hamiltonian(
    M: npt.ArrayLike, delta_deg: Optional[float] = None
) -> Hamiltonian:
    """Diagonalize a Hermitian matrix and group its eigenvalues into levels.

    Consecutive ascending eigenvalues share a level iff their gap is at most
    ``delta_deg``.

    Parameters
    ----------
    M : npt.ArrayLike
        Hermitian matrix.
    delta_deg : Optional[float], optional
        Clustering threshold, by default 1e-8 times the spectral range.

    Returns
    -------
    Hamiltonian
        The grouped Hamiltonian.

    Raises
    ------
    NotHermitian
        If ``M`` is not Hermitian.
    AmbiguousClustering
        If a chain of near-degenerate eigenvalues spans more than
        ``10 * delta_deg``.
    """
    eigenvalues, eigenvectors = eig_hermitian(M)
    if delta_deg is None:
        delta_deg = relative_tolerance(eigenvalues)
    levels = _cluster_levels(eigenvalues, eigenvectors, delta_deg)
    logger.debug(
        f"Built Hamiltonian with {len(levels)} levels",
        extra={"dimension": eigenvalues.size, "delta_deg": delta_deg},
    )
    return Hamiltonian(levels=levels, dimension=int(eigenvalues.size))


def from_eigendecomposition(
    energies: npt.ArrayLike,
    eigenvectors: npt.ArrayLike,
    delta_deg: Optional[float] = None,
) -> Hamiltonian:
    """Group a known eigendecomposition into levels without diagonalizing.

    Raises
    ------
    DimensionMismatch
        If the number of energies does not match the eigenvector columns.
    NotOrthonormal
        If the eigenvector columns are not orthonormal within 1e-9.
    """
    values = np.asarray(energies, dtype=float).reshape(-1)
    vectors = as_cmatrix(eigenvectors, square=True)
    if vectors.shape[1] != values.size:
        raise DimensionMismatch(
            f"{values.size} energies for {vectors.shape[1]} eigenvectors"
        )
    overlap = max_abs(dagger(vectors) @ vectors - np.eye(values.size))
    if overlap > NORM_TOLERANCE:
        raise NotOrthonormal(
            f"Eigenvectors deviate from orthonormality by {overlap:.3e}"
        )
    order = np.argsort(values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    if delta_deg is None:
        delta_deg = relative_tolerance(values)
    levels = _cluster_levels(values, vectors, delta_deg)
    return Hamiltonian(levels=levels, dimension=int(values.size))


def local_sum(H_S: npt.ArrayLike, H_B: npt.ArrayLike) -> Hamiltonian:
    """Non-interacting ``H_S (x) I + I (x) H_B``."""
    a = as_cmatrix(H_S, square=True)
    b = as_cmatrix(H_B, square=True)
    M = tensor(a, np.eye(b.shape[0])) + tensor(np.eye(a.shape[0]), b)
    return build_hamiltonian(M)


@dataclass(frozen=True)
class GapViolation:
    """A quadruple with ``E_k - E_l`` equal to ``E_m - E_n``.

    Indices refer to distinct levels of the Hamiltonian.
    """

    k: int
    l: int  # noqa: E741
    m: int
    n: int
    gap_kl: float
    gap_mn: float
    mismatch: float

    @property
    def indices(self) -> Tuple[int, int, int, int]:
        return (self.k, self.l, self.m, self.n)


@dataclass(frozen=True)
class GapReport:
    """Outcome of the non-degenerate energy gaps scan."""

    passed: bool
    violations: Tuple[GapViolation, ...]
    near_misses: Tuple[GapViolation, ...]
    tolerance: float
    n_levels: int = field(default=0)


def check_nondegenerate_gaps(
    H: Hamiltonian, delta_gap: Optional[float] = None
) -> GapReport:
    """Scan all level quadruples for coinciding energy gaps.

    ``E_k - E_l = E_m - E_n`` is the same relation as
    ``E_k + E_n = E_l + E_m``, and it is trivial exactly when the index
    pairs ``{k, n}`` and ``{l, m}`` coincide. The scan therefore sorts the
    pair sums ``E_a + E_b`` (``a <= b``) and compares neighbours, which
    visits every quadruple class once.

    Parameters
    ----------
    H : Hamiltonian
        Hamiltonian to check.
    delta_gap : Optional[float], optional
        Gap equality tolerance, by default 1e-8 times the spectral range.
        Mismatches in ``(delta_gap, 10 * delta_gap]`` are near misses.

    Returns
    -------
    GapReport
        ``passed`` is True iff no violation was found.

    Raises
    ------
    TooManyLevels
        If ``H`` has more than 64 distinct levels.
    """
    E = H.energies
    D = E.size
    if D > MAX_GAP_LEVELS:
        raise TooManyLevels(
            f"Gap scan supports at most {MAX_GAP_LEVELS} levels, got {D}"
        )
    tol = relative_tolerance(E) if delta_gap is None else float(delta_gap)
    window = 10.0 * tol

    a, b = np.triu_indices(D)
    sums = E[a] + E[b]
    order = np.argsort(sums, kind="stable")
    sorted_sums = sums[order]

    violations: List[GapViolation] = []
    near_misses: List[GapViolation] = []
    for i in range(sorted_sums.size):
        j = i + 1
        while (
            j < sorted_sums.size and sorted_sums[j] - sorted_sums[i] <= window
        ):
            first, second = sorted(
                [
                    (int(a[order[i]]), int(b[order[i]])),
                    (int(a[order[j]]), int(b[order[j]])),
                ]
            )
            k, n = first[1], first[0]
            l, m = second[1], second[0]  # noqa: E741
            gap_kl = float(E[k] - E[l])
            gap_mn = float(E[m] - E[n])
            record = GapViolation(
                k, l, m, n, gap_kl, gap_mn, abs(gap_kl - gap_mn)
            )
            if record.mismatch <= tol:
                violations.append(record)
            else:
                near_misses.append(record)
            j += 1

    violations.sort(key=lambda v: v.indices)
    near_misses.sort(key=lambda v: v.indices)
    report = GapReport(
        passed=not violations,
        violations=tuple(violations),
        near_misses=tuple(near_misses),
        tolerance=tol,
        n_levels=D,
    )
    if violations:
        logger.warning(
            f"Gap check failed with {len(violations)} violations",
            extra={"first_violation": violations[0].indices},
        )
    elif near_misses:
        logger.warning(f"Gap check passed with {len(near_misses)} near misses")
    return report


@dataclass(frozen=True, eq=False)
class AdaptedState:
    energy: float
    vector: npt.NDArray[np.complex128]
    amplitude: float


@dataclass(frozen=True, eq=False)
class AdaptedBasis:
    """Energy eigenbasis in which a pure state overlaps one vector per level.

    Amplitudes are real and positive: ``c_n = sqrt(<psi|P_n|psi>)`` and
    ``|n> = P_n |psi> / c_n``.
    """

    entries: Tuple[AdaptedState, ...]

    @property
    def energies(self) -> RVector:
        return np.array([e.energy for e in self.entries])

    @property
    def amplitudes(self) -> RVector:
        return np.array([e.amplitude for e in self.entries])

    @property
    def vectors(self) -> CMatrix:
        return np.column_stack([e.vector for e in self.entries])

    def state_at(self, t: float) -> npt.NDArray[np.complex128]:
        """``sum_n c_n exp(-i E_n t) |n>``."""
        phases = self.amplitudes * np.exp(-1j * self.energies * t)
        return self.vectors @ phases


def adapted_eigenbasis(
    H: Hamiltonian, psi0: npt.ArrayLike, tau_occ: float = TAU_OCC
) -> AdaptedBasis:
    """Project a pure state onto each eigenspace it occupies.

    Parameters
    ----------
    H : Hamiltonian
        The Hamiltonian.
    psi0 : npt.ArrayLike
        Normalized state vector.
    tau_occ : float, optional
        Occupation cutoff, by default 1e-12. Levels at or below it are
        omitted.

    Returns
    -------
    AdaptedBasis
        One entry per occupied level.

    Raises
    ------
    DimensionMismatch
        If ``psi0`` does not match the Hamiltonian dimension.
    InvalidState
        If ``psi0`` is not normalized within 1e-9.
    """
    psi = as_cvector(psi0)
    if psi.size != H.dimension:
        raise DimensionMismatch(
            f"State of dimension {psi.size} for Hamiltonian of dimension "
            f"{H.dimension}"
        )
    norm_sq = float(np.vdot(psi, psi).real)
    if abs(norm_sq - 1.0) > NORM_TOLERANCE:
        raise InvalidState(f"State is not normalized: <psi|psi> = {norm_sq}")

    entries = []
    for level in H.levels:
        coords = dagger(level.basis) @ psi
        occupation = float(np.vdot(coords, coords).real)
        if occupation > tau_occ:
            amplitude = float(np.sqrt(occupation))
            entries.append(
                AdaptedState(
                    energy=level.energy,
                    vector=(level.basis @ coords) / amplitude,
                    amplitude=amplitude,
                )
            )
    return AdaptedBasis(entries=tuple(entries))


def haar_unitary(d: int, rng: SeedLike) -> CMatrix:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    gen = make_rng(rng)
    ginibre = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
    Q, R = np.linalg.qr(ginibre)
    diag = np.diagonal(R)
    # Fix the QR phase freedom so Q is Haar distributed
    return Q * (diag / np.abs(diag))


def random_hamiltonian(
    d: int,
    ensemble: Ensemble = "gue",
    seed: SeedLike = 0,
    max_rounds: int = 100,
) -> Hamiltonian:
    """Draw a random Hamiltonian.

    Parameters
    ----------
    d : int
        Dimension, at least 2.
    ensemble : {"gue", "spaced-spectrum"}, optional
        ``gue`` draws ``(A + A^dagger) / 2`` with ``A`` a complex Gaussian
        matrix. ``spaced-spectrum`` draws sorted energies with i.i.d.
        uniform gaps in [0.5, 1.5) and a Haar-random eigenbasis, then
        jitters the energies until the gap check passes. By default "gue".
    seed : SeedLike, optional
        Integer seed or generator, by default 0
    max_rounds : int, optional
        Jitter rounds for ``spaced-spectrum``, by default 100

    Returns
    -------
    Hamiltonian
        The drawn Hamiltonian.

    Raises
    ------
    BadDimension
        If ``d < 2``.
    ExhaustedRetries
        If ``spaced-spectrum`` never passes the gap check.
    """
    if d < 2:
        raise BadDimension(f"Random Hamiltonians need d >= 2, got {d}")
    gen = make_rng(seed)
    if ensemble == "gue":
        A = gen.standard_normal((d, d)) + 1j * gen.standard_normal((d, d))
        return build_hamiltonian(0.5 * (A + dagger(A)))
    if ensemble != "spaced-spectrum":
        raise ValueError(f"Unknown ensemble {ensemble!r}")

    base = np.concatenate([[0.0], np.cumsum(gen.uniform(0.5, 1.5, d - 1))])
    basis = haar_unitary(d, gen)
    energies = base
    for attempt in range(max_rounds):
        H = from_eigendecomposition(energies, basis)
        if check_nondegenerate_gaps(H).passed:
            logger.debug(f"Spaced spectrum accepted after {attempt} jitters")
            return H
        # Offsets from the base spectrum stay below 0.05, gaps are >= 0.5
        energies = base + gen.uniform(-0.05, 0.05, d)
    raise ExhaustedRetries(
        f"No gap-valid spectrum after {max_rounds} perturbation rounds"
    )
