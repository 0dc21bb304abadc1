"""Dense complex linear algebra used by every other module.

Composite spaces always put subsystem S on the major (slow) index, so that
``tensor(A, B)[i*dB + a, j*dB + b] == A[i, j] * B[a, b]`` and
``partial_trace`` inverts exactly that layout.
"""

# Standard Library
from typing import Literal, Tuple

# Third Party
import numpy as np
import numpy.typing as npt
import scipy.linalg
from aws_lambda_powertools import Logger

# My Modules
from eqlab.exceptions import (
    NonSquare,
    NoConvergence,
    NotHermitian,
    InvalidMatrix,
    DimensionMismatch,
)

logger = Logger(service="eqlab", child=True)

CMatrix = npt.NDArray[np.complex128]
RVector = npt.NDArray[np.float64]

# Absolute tolerance on max |M - M^dagger|
TAU_HERM = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_cmatrix(M: npt.ArrayLike, *, square: bool = False) -> CMatrix:
    """Coerce input to a finite complex128 2-D array.

    Parameters
    ----------
    M : npt.ArrayLike
        Matrix-like input.
    square : bool, optional
        Require a square matrix, by default False

    Returns
    -------
    CMatrix
        The coerced matrix (a copy only when the dtype had to change).

    Raises
    ------
    InvalidMatrix
        If the input is not 2-D or has non-finite entries.
    NonSquare
        If ``square`` is set and the matrix is rectangular.
    """
    arr = np.asarray(M, dtype=np.complex128)
    if arr.ndim != 2 or 0 in arr.shape:
        raise InvalidMatrix(
            f"Expected a non-empty 2-D matrix, got {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrix("Matrix has NaN or Inf entries")
    if square and arr.shape[0] != arr.shape[1]:
        raise NonSquare(f"Expected a square matrix, got {arr.shape}")
    return arr


def as_cvector(v: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    """Coerce input to a finite complex128 1-D array."""
    arr = np.asarray(v, dtype=np.complex128).reshape(-1)
    if arr.size == 0 or not np.all(np.isfinite(arr)):
        raise InvalidMatrix("Vector is empty or has NaN/Inf entries")
    return arr


def dagger(M: CMatrix) -> CMatrix:
    return np.conj(M).T


def max_abs(M: npt.ArrayLike) -> float:
    """Largest absolute entry, the max-norm used by all tolerance checks."""
    arr = np.asarray(M)
    return float(np.max(np.abs(arr))) if arr.size else 0.0


def hermitian_asymmetry(M: CMatrix) -> float:
    return max_abs(M - dagger(M))


def is_hermitian(M: npt.ArrayLike, tol: float = TAU_HERM) -> bool:
    arr = as_cmatrix(M)
    return arr.shape[0] == arr.shape[1] and hermitian_asymmetry(arr) <= tol


def require_hermitian(M: npt.ArrayLike, tol: float = TAU_HERM) -> CMatrix:
    """Check Hermiticity and return the symmetrized matrix ``(M + M^†)/2``.

    Raises
    ------
    NotHermitian
        If ``max |M - M^dagger| > tol``.
    """
    arr = as_cmatrix(M, square=True)
    asymmetry = hermitian_asymmetry(arr)
    if asymmetry > tol:
        raise NotHermitian(asymmetry, tol)
    return 0.5 * (arr + dagger(arr))


def commutator(A: CMatrix, B: CMatrix) -> CMatrix:
    return A @ B - B @ A


def ket(index: int, dim: int) -> npt.NDArray[np.complex128]:
    """Computational basis vector ``|index>`` in dimension ``dim``."""
    v = np.zeros(dim, dtype=np.complex128)
    v[index] = 1.0
    return v


def projector(v: npt.ArrayLike) -> CMatrix:
    """Rank-one projector ``|v><v|`` (``v`` is not normalized here)."""
    vec = as_cvector(v)
    return np.outer(vec, vec.conj())


def eig_hermitian(
    M: npt.ArrayLike, tol: float = TAU_HERM
) -> Tuple[RVector, CMatrix]:
    """Eigendecomposition of a Hermitian matrix.

    The input is symmetrized before decomposition so float noise below
    ``tol`` does not leak into the eigenvectors.

    Parameters
    ----------
    M : npt.ArrayLike
        Hermitian matrix.
    tol : float, optional
        Hermiticity tolerance, by default TAU_HERM

    Returns
    -------
    Tuple[RVector, CMatrix]
        Ascending eigenvalues and the matching orthonormal eigenvectors as
        columns.

    Raises
    ------
    NotHermitian
        If the symmetry check fails.
    NoConvergence
        If LAPACK fails to converge.
    """
    herm = require_hermitian(M, tol)
    try:
        eigenvalues, eigenvectors = scipy.linalg.eigh(herm)
    except np.linalg.LinAlgError as e:
        logger.warning(f"Hermitian eigensolver failed: {e}")
        raise NoConvergence(str(e)) from e
    return eigenvalues, eigenvectors


def operator_norm(A: npt.ArrayLike) -> float:
    """Largest singular value of ``A``."""
    arr = as_cmatrix(A)
    return float(scipy.linalg.svdvals(arr)[0])


def tensor(A: npt.ArrayLike, B: npt.ArrayLike) -> CMatrix:
    """Kronecker product with the first factor on the major index."""
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


def partial_trace(
    M: npt.ArrayLike, d_S: int, d_B: int, keep: Literal["S", "B"] = "S"
) -> CMatrix:
    """Partial trace over one factor of ``H_S (x) H_B``.

    Parameters
    ----------
    M : npt.ArrayLike
        Operator on the composite space, or a stack of them with shape
        ``(..., d_S*d_B, d_S*d_B)``.
    d_S : int
        Dimension of the leading factor.
    d_B : int
        Dimension of the trailing factor.
    keep : {"S", "B"}, optional
        Which factor survives, by default "S"

    Returns
    -------
    CMatrix
        The reduced operator(s).

    Raises
    ------
    DimensionMismatch
        If the matrix size is not ``d_S * d_B``.
    """
    arr = np.asarray(M, dtype=np.complex128)
    d = d_S * d_B
    if arr.ndim < 2 or arr.shape[-2:] != (d, d):
        raise DimensionMismatch(
            f"Operator of shape {arr.shape[-2:]} does not live on a "
            f"{d_S} x {d_B} composite space"
        )
    lead = arr.shape[:-2]
    blocks = arr.reshape(lead + (d_S, d_B, d_S, d_B))
    if keep == "S":
        return np.einsum("...iaja->...ij", blocks)
    if keep == "B":
        return np.einsum("...iaib->...ab", blocks)
    raise ValueError(f"keep must be 'S' or 'B', got {keep!r}")


def trace_norm(M: npt.ArrayLike, tol: float = TAU_HERM) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    herm = require_hermitian(M, tol)
    return float(np.sum(np.abs(np.linalg.eigvalsh(herm))))
