"""Counter-based random streams.

A stream is keyed by ``(master_seed, index, purpose)``; the draw sequence of
one instance never depends on how many other instances ran before it or on
which worker ran it.
"""

# Standard Library
import hashlib
from typing import Union

# Third Party
import numpy as np

SeedLike = Union[int, np.random.Generator]


def purpose_code(purpose: str) -> int:
    """Stable 32-bit integer for a stream purpose name."""
    digest = hashlib.sha256(purpose.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Return a Philox generator for an integer seed; pass generators through.

    Parameters
    ----------
    seed : SeedLike
        Non-negative integer seed, or an existing generator.

    Returns
    -------
    np.random.Generator
        The generator to draw from.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if int(seed) < 0:
        raise ValueError(f"Seeds must be non-negative, got {seed}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def stream(master_seed: int, index: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (instance, purpose) pair.

    Parameters
    ----------
    master_seed : int
        Seed of the whole run.
    index : int
        Instance index within the run.
    purpose : str
        What the draws are for, e.g. ``"hamiltonian"`` or ``"state"``.

    Returns
    -------
    np.random.Generator
        A Philox generator keyed by the three values.
    """
    key = [int(master_seed), int(index), purpose_code(purpose)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
