"""Error hierarchy for eqlab.

Every error derives from ``EqlabError`` and from the builtin exception that
best describes it, so callers can catch either.
"""

# Standard Library
from typing import Any, Sequence


class EqlabError(Exception):
    """Base class for all eqlab errors."""


class InvalidMatrix(EqlabError, ValueError):
    """Matrix has the wrong rank, or NaN/Inf entries."""


class NonSquare(EqlabError, ValueError):
    """An operation that needs a square matrix received a rectangular one."""


class NotHermitian(EqlabError, ValueError):
    """Hermiticity check failed.

    Parameters
    ----------
    asymmetry : float
        Largest entry of ``|M - M^dagger|``.
    tolerance : float
        The tolerance the asymmetry was compared against.
    """

    def __init__(self, asymmetry: float, tolerance: float) -> None:
        self.asymmetry = asymmetry
        self.tolerance = tolerance
        super().__init__(
            f"Matrix is not Hermitian: max |M - M^dagger| = {asymmetry:.3e} "
            f"exceeds tolerance {tolerance:.1e}"
        )


class NotOrthonormal(EqlabError, ValueError):
    """A set of vectors expected to be orthonormal is not."""


class DimensionMismatch(EqlabError, ValueError):
    """Operand dimensions do not agree."""


class NoConvergence(EqlabError, ArithmeticError):
    """An iterative solver exceeded its iteration cap."""


class AmbiguousClustering(EqlabError, ValueError):
    """A chain of near-degenerate eigenvalues is too wide to be one level."""


class TooManyLevels(EqlabError, ValueError):
    """The gap scan refuses spectra with too many distinct levels."""


class ExhaustedRetries(EqlabError, RuntimeError):
    """A randomized construction never satisfied its acceptance check."""


class InvalidState(EqlabError, ValueError):
    """Matrix or vector is not a valid quantum state."""


class DegenerateGaps(EqlabError, ValueError):
    """The Hamiltonian violates the non-degenerate energy gaps condition.

    Parameters
    ----------
    report : Any
        The ``GapReport`` produced by the failed check.
    """

    def __init__(self, report: Any) -> None:
        self.report = report
        first = report.violations[0] if report.violations else None
        detail = (
            f"; first violating quadruple {first.indices}" if first else ""
        )
        super().__init__(
            f"Hamiltonian has degenerate energy gaps "
            f"({len(report.violations)} violations{detail})"
        )


class EmptySet(EqlabError, ValueError):
    """A measurement set has no members."""


class BadDimension(EqlabError, ValueError):
    """A dimension parameter is out of its allowed range."""


class BasisNotInSubspace(EqlabError, ValueError):
    """A supplied basis vector has weight outside the target subspace."""


class NotEigenstates(EqlabError, ValueError):
    """A supplied basis vector is not an energy eigenstate."""


class EdgeOnLevel(EqlabError, ValueError):
    """A band edge coincides with an energy level."""


class InvalidBandEdges(EqlabError, ValueError):
    """Band edges are not strictly ascending."""


class IndexOutOfRange(EqlabError, IndexError):
    """A subspace index does not name a member of the partition."""


class StateOutsideSubspace(EqlabError, ValueError):
    """The initial state is not supported in the requested subspace."""


class InvalidPovm(EqlabError, ValueError):
    """A loaded POVM failed validation.

    Parameters
    ----------
    label : str
        Label of the offending POVM.
    violations : Sequence[Any]
        The violation records reported by ``validate_povm``.
    """

    def __init__(self, label: str, violations: Sequence[Any]) -> None:
        self.label = label
        self.violations = list(violations)
        summary = ", ".join(
            f"{v.kind}[{v.outcome}]={v.magnitude:.3e}" for v in self.violations
        )
        super().__init__(f"POVM '{label}' is invalid: {summary}")


class ConfigError(EqlabError, ValueError):
    """An experiment configuration is invalid.

    Parameters
    ----------
    field : str
        Dotted path of the offending field.
    message : str
        What is wrong with it.
    """

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")
