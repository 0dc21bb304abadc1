"""JSON and CSV encoding of matrices, states, measurements and reports.

Complex matrices travel as nested arrays whose entries are ``[re, im]``
pairs; plain real numbers are accepted on input.
"""

# Standard Library
import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

# Third Party
import numpy as np
import numpy.typing as npt
from aws_lambda_powertools import Logger

# My Modules
from eqlab.exceptions import ConfigError, EqlabError, InvalidPovm
from eqlab.distinguish import POVM, MeasurementSet, validate_povm
from eqlab.dynamics import DensityOperator
from eqlab.matrixkit import CMatrix
from eqlab.spectral import (
    Hamiltonian,
    build_hamiltonian,
    from_eigendecomposition,
)
from eqlab.universality import SubspacePartition, microcanonical_partition

logger = Logger(service="eqlab", child=True)

PathLike = Union[str, Path]


def encode_complex(values: npt.ArrayLike) -> List[Any]:
    """Nested lists with every entry replaced by ``[re, im]``."""
    arr = np.asarray(values, dtype=np.complex128)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def decode_complex(data: Any, field: str, ndim: int) -> npt.NDArray:
    """Inverse of ``encode_complex`` for arrays of ``ndim`` dimensions.

    Raises
    ------
    ConfigError
        If ``data`` is neither ``ndim``-dimensional real nor ``[re, im]``
        pairs.
    """
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as e:
        raise ConfigError(field, f"not a numeric array: {e}") from e
    if arr.ndim == ndim:
        return arr.astype(np.complex128)
    if arr.ndim == ndim + 1 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    raise ConfigError(
        field, f"expected a {ndim}-d array of [re, im] pairs, got {arr.shape}"
    )


def decode_matrix(data: Any, field: str) -> CMatrix:
    M = decode_complex(data, field, 2)
    if M.shape[0] != M.shape[1]:
        raise ConfigError(field, f"matrix is not square: {M.shape}")
    return M


def _to_builtin(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(v) for v in value]
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return encode_complex(value)
        return value.tolist()
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        number = float(value)
        # JSON has no inf or nan
        return number if math.isfinite(number) else str(number)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def to_json_text(data: Mapping[str, Any]) -> str:
    """Canonical text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_to_builtin(data), sort_keys=True, indent=2) + "\n"


def read_json(path: PathLike, field: str = "file") -> Any:
    """Read any JSON value from disk.

    Raises
    ------
    ConfigError
        If the file is missing or is not valid JSON.
    """
    location = Path(path)
    try:
        data = json.loads(location.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        logger.warning(f"File '{location}' not found")
        raise ConfigError(field, f"file not found: {location}") from e
    except json.JSONDecodeError as e:
        logger.error(f"Error parsing JSON file '{location}': {e}")
        raise ConfigError(field, f"invalid JSON in {location}: {e}") from e
    logger.debug(f"Loaded '{location}'")
    return data


def load_json(path: PathLike, field: str = "file") -> Dict[str, Any]:
    """Read a JSON object from disk.

    Raises
    ------
    ConfigError
        If the file is missing or does not hold a JSON object.
    """
    data = read_json(path, field)
    if not isinstance(data, dict):
        raise ConfigError(field, f"{path} does not hold a JSON object")
    return data


def dump_json(data: Mapping[str, Any], path: PathLike) -> Path:
    location = Path(path)
    location.parent.mkdir(parents=True, exist_ok=True)
    location.write_text(to_json_text(data), encoding="utf-8")
    logger.info(f"Wrote report '{location}'")
    return location


def decode_hamiltonian(section: Mapping[str, Any], field: str) -> Hamiltonian:
    """Build a Hamiltonian from ``{"matrix": ...}`` or
    ``{"energies": [...], "eigenvectors": ...}``.

    An optional ``delta_deg`` sets the degeneracy tolerance.
    """
    delta_deg = section.get("delta_deg")
    try:
        if "matrix" in section:
            M = decode_matrix(section["matrix"], f"{field}.matrix")
            return build_hamiltonian(M, delta_deg)
        if "energies" in section and "eigenvectors" in section:
            vectors = decode_matrix(
                section["eigenvectors"], f"{field}.eigenvectors"
            )
            return from_eigendecomposition(
                section["energies"], vectors, delta_deg
            )
    except ConfigError:
        raise
    except EqlabError as e:
        raise ConfigError(field, str(e)) from e
    raise ConfigError(
        field, "needs 'matrix' or both 'energies' and 'eigenvectors'"
    )


def decode_state(section: Mapping[str, Any], field: str) -> DensityOperator:
    """``{"vector": ...}`` for pure states, ``{"matrix": ...}`` otherwise."""
    try:
        if "vector" in section:
            psi = decode_complex(section["vector"], f"{field}.vector", 1)
            return DensityOperator.from_vector(psi)
        if "matrix" in section:
            rho = decode_matrix(section["matrix"], f"{field}.matrix")
            return DensityOperator.from_matrix(rho)
    except ConfigError:
        raise
    except EqlabError as e:
        raise ConfigError(field, str(e)) from e
    raise ConfigError(field, "needs 'vector' or 'matrix'")


def decode_povm(section: Any, field: str) -> POVM:
    """Decode and validate ``{"label": ..., "outcomes": [...]}``.

    Each outcome is ``{"result": ..., "matrix": ...}``; ``result``
    defaults to the outcome index.

    Raises
    ------
    ConfigError
        If the object does not have that shape.
    InvalidPovm
        If the operators fail positivity or completeness.
    """
    if not isinstance(section, Mapping):
        raise ConfigError(field, "a POVM must be a JSON object")
    outcomes = section.get("outcomes")
    if not isinstance(outcomes, list) or not outcomes:
        raise ConfigError(
            f"{field}.outcomes", "needs a non-empty list of outcomes"
        )
    operators = []
    for i, outcome in enumerate(outcomes):
        where = f"{field}.outcomes[{i}]"
        if not isinstance(outcome, Mapping) or "matrix" not in outcome:
            raise ConfigError(where, "needs a 'matrix' entry")
        operators.append(decode_matrix(outcome["matrix"], f"{where}.matrix"))
    if len({op.shape for op in operators}) != 1:
        raise ConfigError(
            f"{field}.outcomes", "outcome matrices differ in dimension"
        )
    results = [str(o.get("result", i)) for i, o in enumerate(outcomes)]
    try:
        povm = POVM.from_operators(
            operators, label=str(section.get("label", field)), results=results
        )
    except EqlabError as e:
        raise ConfigError(field, str(e)) from e
    check = validate_povm(povm)
    if not check.ok:
        raise InvalidPovm(povm.label, check.violations)
    return povm


def decode_measurements(data: Any, field: str) -> MeasurementSet:
    """Measurement set from one POVM object, a list of them, or
    ``{"povms": [...]}``."""
    if isinstance(data, Mapping) and "povms" in data:
        data, field = data["povms"], f"{field}.povms"
    if isinstance(data, Mapping):
        return MeasurementSet.of([decode_povm(data, field)])
    if not isinstance(data, list) or not data:
        raise ConfigError(field, "needs a POVM or a non-empty list of POVMs")
    return MeasurementSet.of(
        decode_povm(item, f"{field}[{i}]") for i, item in enumerate(data)
    )


def decode_partition(
    section: Mapping[str, Any], H: Hamiltonian, field: str
) -> SubspacePartition:
    """Partition from ``{"band_edges": [...]}`` or from
    ``{"projectors": [...], "labels": [...]}``."""
    if "band_edges" in section:
        return microcanonical_partition(
            H, section["band_edges"], section.get("delta_deg")
        )
    if "projectors" in section:
        projectors = [
            decode_matrix(p, f"{field}.projectors[{i}]")
            for i, p in enumerate(section["projectors"])
        ]
        return SubspacePartition.from_projectors(
            projectors, section.get("labels")
        )
    raise ConfigError(field, "needs 'band_edges' or 'projectors'")


def encode_povm(P: POVM) -> Dict[str, Any]:
    return {
        "label": P.label,
        "outcomes": [
            {"result": o.result, "matrix": encode_complex(o.operator)}
            for o in P.outcomes
        ],
    }


def write_series_csv(
    path: PathLike,
    times: npt.ArrayLike,
    columns: Mapping[str, npt.ArrayLike],
    precision: Optional[int] = 12,
) -> Path:
    """Write a time series with a leading ``t`` column.

    Complex columns are split into ``<name>_re`` and ``<name>_im``; column
    order follows ``columns``.
    """
    header = ["t"]
    data = [np.asarray(times, dtype=float)]
    for name, values in columns.items():
        arr = np.asarray(values)
        if np.iscomplexobj(arr):
            header += [f"{name}_re", f"{name}_im"]
            data += [arr.real, arr.imag]
        else:
            header.append(name)
            data.append(arr.astype(float))
    location = Path(path)
    location.parent.mkdir(parents=True, exist_ok=True)
    fmt = (lambda x: f"{x:.{precision}g}") if precision else repr
    with location.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*data):
            writer.writerow([fmt(float(x)) for x in row])
    logger.info(f"Wrote {len(data[0])} rows to '{location}'")
    return location
