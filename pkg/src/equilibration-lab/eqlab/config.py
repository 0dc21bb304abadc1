"""Loading and checking experiment configs."""

# Standard Library
from pathlib import Path
from dataclasses import field, replace, dataclass
from typing import Any, Dict, Mapping, Optional

# Third Party
from aws_lambda_powertools import Logger
from aws_lambda_powertools.utilities.validation import (
    SchemaValidationError,
    validate,
)

# My Modules
from eqlab.codec import load_json
from eqlab.exceptions import ConfigError
from eqlab.schemas import CONFIG_SCHEMA

logger = Logger(service="eqlab", child=True)

# Sections each mode cannot run without
REQUIRED_SECTIONS = {
    "check-gaps": ("hamiltonian",),
    "theorem1": ("hamiltonian",),
    "corollary": ("hamiltonian", "measurements"),
    "subsystem": ("hamiltonian", "split"),
    "universality": ("hamiltonian", "partition"),
    "counterexample": (),
    "sweep": (),
}


def _schema_field(error: SchemaValidationError) -> str:
    """Dotted path of the offending field, without the root ``data``."""
    name = getattr(error, "name", None) or ""
    if name.startswith("data."):
        return name[len("data.") :]
    if name == "data" or not name:
        return "config"
    return name


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment description.

    Sections stay in their JSON form; the harness decodes them.
    ``base_dir`` anchors relative file references.
    """

    mode: str
    seed: int = 0
    out: Optional[Path] = None
    workers: int = 1
    k: int = 2
    hamiltonian: Optional[Dict[str, Any]] = None
    state: Dict[str, Any] = field(
        default_factory=lambda: {"source": "haar-pure"}
    )
    observable: Dict[str, Any] = field(
        default_factory=lambda: {"random": "complex"}
    )
    measurements: Optional[Dict[str, Any]] = None
    partition: Optional[Dict[str, Any]] = None
    subspace: int = 0
    split: Optional[Dict[str, int]] = None
    convention: Dict[str, Any] = field(default_factory=dict)
    delta_gap: Optional[float] = None
    sweep: Dict[str, Any] = field(default_factory=dict)
    series: bool = False
    base_dir: Path = Path(".")

    def resolve(self, path: str) -> Path:
        location = Path(path)
        return location if location.is_absolute() else self.base_dir / location

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if "out" in changes:
            changes["out"] = Path(changes["out"])
        return replace(self, **changes)


def parse_config(
    data: Mapping[str, Any], base_dir: Optional[Path] = None
) -> ExperimentConfig:
    """Validate a raw config object against the schema.

    Raises
    ------
    ConfigError
        With the failing field path if the schema rejects ``data``.
    """
    try:
        validate(event=dict(data), schema=CONFIG_SCHEMA)
    except SchemaValidationError as e:
        path = _schema_field(e)
        logger.warning(f"Config rejected at '{path}': {e}")
        raise ConfigError(path, str(e)) from e

    values = dict(data)
    if "out" in values:
        values["out"] = Path(values["out"])
    return ExperimentConfig(base_dir=base_dir or Path("."), **values)


def load_config(path: Path) -> ExperimentConfig:
    """Read, validate and anchor a config file."""
    location = Path(path)
    data = load_json(location, field="config")
    config = parse_config(data, base_dir=location.resolve().parent)
    logger.info(f"Loaded {config.mode} config from '{location}'")
    return config


def check_config(config: ExperimentConfig) -> None:
    """Cross-field checks the schema cannot express.

    Raises
    ------
    ConfigError
        If a mode-required section is missing or a referenced file does
        not exist.
    """
    for section in REQUIRED_SECTIONS[config.mode]:
        if getattr(config, section) is None:
            raise ConfigError(
                section, f"required for mode '{config.mode}'"
            )
    for section in ("hamiltonian", "state", "observable", "measurements"):
        entry = getattr(config, section)
        if not entry or "file" not in entry:
            continue
        if not config.resolve(entry["file"]).is_file():
            raise ConfigError(
                f"{section}.file", f"file not found: {entry['file']}"
            )
    if config.state.get("source") == "file" and "file" not in config.state:
        raise ConfigError("state.file", "required when source is 'file'")
    if config.state.get("source") == "inline" and not (
        {"vector", "matrix"} & set(config.state)
    ):
        raise ConfigError("state", "inline states need 'vector' or 'matrix'")
    if config.split and config.hamiltonian:
        dimension = config.hamiltonian.get("dimension")
        product = config.split["d_S"] * config.split["d_B"]
        if dimension is not None and dimension != product:
            raise ConfigError(
                "split", f"d_S * d_B = {product} but dimension is {dimension}"
            )
