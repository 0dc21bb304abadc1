"""Config-driven runs of every analysis and seeded ensemble sweeps.

Every random draw of a run comes from ``stream(seed, index, purpose)``, so
reports depend only on the config and its seed, never on worker count or
scheduling.
"""

# Standard Library
import json
import math
from pathlib import Path
from dataclasses import asdict, dataclass
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

# Third Party
import numpy as np
from aws_lambda_powertools import Logger
from aws_lambda_powertools.utilities.validation import validate

# My Modules
from eqlab import __version__
from eqlab.rng import stream
from eqlab.exceptions import ConfigError
from eqlab.schemas import report_schema
from eqlab.matrixkit import CMatrix
from eqlab.config import ExperimentConfig, check_config
from eqlab.subsystem import (
    BipartiteSplit,
    subsystem_bound,
    distance_series,
    subsystem_chain,
    avg_subsystem_distance,
)
from eqlab.universality import (
    SubspacePartition,
    state_in_subspace,
    universality_report,
    validate_partition,
    perturbed_measurement,
)
from eqlab.distinguish import (
    MeasurementSet,
    random_povm,
    corollary_report,
    distinguishability_series,
)
from eqlab.equilibration import (
    theorem1_chain,
    theorem1_report,
    sigma_sq_sampled,
    reimann_counterexample,
)
from eqlab.spectral import (
    Hamiltonian,
    random_hamiltonian,
    check_nondegenerate_gaps,
)
from eqlab.dynamics import (
    DEFAULT_HORIZON,
    DEFAULT_SAMPLES,
    DensityOperator,
    TimeAverageConvention,
    dephase,
    haar_state,
    expectation_series,
    random_mixed_state,
    equal_superposition,
)
from eqlab.codec import (
    to_json_text,
    dump_json,
    load_json,
    read_json,
    decode_state,
    decode_matrix,
    decode_partition,
    write_series_csv,
    decode_hamiltonian,
    decode_measurements,
    encode_complex,
)

logger = Logger(service="eqlab", child=True)

SWEEP_DEFAULTS = {
    "instances": 100,
    "dimensions": [16],
    "ensemble": "gue",
    "states": ["haar-pure"],
    "subsystem_dim": 2,
    "scaling": {"bath_dims": [2, 4, 8, 16], "instances": 10},
}


@dataclass(frozen=True)
class RunResult:
    mode: str
    report: Dict[str, Any]
    passed: bool
    paths: Tuple[Path, ...] = ()


def _seed_for(config: ExperimentConfig, index: int, purpose: str) -> int:
    return int(stream(config.seed, index, purpose).integers(2**32))


def load_hamiltonian(config: ExperimentConfig, index: int = 0) -> Hamiltonian:
    """Hamiltonian from a file, an inline section or a random ensemble."""
    section = config.hamiltonian or {}
    if "file" in section:
        data = load_json(config.resolve(section["file"]), "hamiltonian.file")
        return decode_hamiltonian(data, "hamiltonian.file")
    if "ensemble" in section:
        if "dimension" not in section:
            raise ConfigError(
                "hamiltonian.dimension", "required for ensembles"
            )
        return random_hamiltonian(
            section["dimension"],
            section["ensemble"],
            stream(config.seed, index, "hamiltonian"),
        )
    return decode_hamiltonian(section, "hamiltonian")


def load_state(
    config: ExperimentConfig,
    H: Hamiltonian,
    index: int = 0,
    partition: Optional[SubspacePartition] = None,
) -> DensityOperator:
    """Initial state for the configured source."""
    section = config.state
    source = section.get("source", "haar-pure")
    rng = stream(config.seed, index, "state")
    if source == "file":
        data = load_json(config.resolve(section["file"]), "state.file")
        return decode_state(data, "state.file")
    if source == "inline":
        return decode_state(section, "state")
    if source == "haar-pure":
        return haar_state(H.dimension, rng)
    if source == "haar-mixed":
        return random_mixed_state(H.dimension, rng, section.get("rank"))
    if source == "eigenmix":
        return equal_superposition(
            H, section.get("n_levels", H.n_levels), rng
        )
    if source == "eigenstate":
        level = section.get("level", 0)
        if level >= H.n_levels:
            raise ConfigError(
                "state.level", f"only {H.n_levels} levels available"
            )
        return DensityOperator.from_vector(H.levels[level].basis[:, 0])
    if source == "in-subspace":
        if partition is None:
            raise ConfigError("state.source", "needs a partition")
        return state_in_subspace(partition.projectors[config.subspace], rng)
    raise ConfigError("state.source", f"unknown source {source!r}")


def load_observable(
    config: ExperimentConfig, d: int, index: int = 0
) -> CMatrix:
    section = config.observable
    if "file" in section:
        data = load_json(config.resolve(section["file"]), "observable.file")
        return decode_matrix(data.get("matrix"), "observable.file.matrix")
    if "matrix" in section:
        return decode_matrix(section["matrix"], "observable.matrix")
    rng = stream(config.seed, index, "observable")
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    if section.get("random") == "hermitian":
        return 0.5 * (A + A.conj().T)
    return A


def load_measurements(
    config: ExperimentConfig,
    d: int,
    index: int = 0,
    partition: Optional[SubspacePartition] = None,
) -> MeasurementSet:
    section = config.measurements or {"partition": {}}
    if "file" in section:
        data = read_json(config.resolve(section["file"]), "measurements.file")
        return decode_measurements(data, "measurements.file")
    if "povms" in section:
        return decode_measurements(section["povms"], "measurements.povms")
    rng = stream(config.seed, index, "measurements")
    if "random" in section:
        count = section["random"].get("count", 3)
        outcomes = section["random"].get("outcomes", 2)
        return MeasurementSet.of(
            random_povm(d, outcomes, rng, label=f"random{i}")
            for i in range(count)
        )
    if partition is None:
        raise ConfigError("measurements.partition", "needs a partition")
    eta = section["partition"].get("perturbation", 0.0)
    if eta == 0.0:
        return MeasurementSet.of([partition.measurement()])
    return MeasurementSet.of([perturbed_measurement(partition, eta, rng)])


def time_convention(
    config: ExperimentConfig, H: Hamiltonian, index: int = 0
) -> TimeAverageConvention:
    section = config.convention
    n_samples = section.get("n_samples", DEFAULT_SAMPLES)
    seed = _seed_for(config, index, "times")
    if "t_max" in section:
        return TimeAverageConvention(section["t_max"], n_samples, seed)
    return TimeAverageConvention.default_for(
        H, n_samples, seed, section.get("horizon", DEFAULT_HORIZON)
    )


def _check_gaps(config: ExperimentConfig) -> Tuple[Dict, bool, Dict]:
    H = load_hamiltonian(config)
    report = check_nondegenerate_gaps(H, config.delta_gap)
    results = asdict(report)
    results["violations"] = [
        dict(asdict(v), indices=list(v.indices)) for v in report.violations
    ]
    return results, report.passed, {}


def _theorem1(config: ExperimentConfig) -> Tuple[Dict, bool, Dict]:
    H = load_hamiltonian(config)
    rho0 = load_state(config, H)
    A = load_observable(config, H.dimension)
    report = theorem1_report(H, rho0, A, config.delta_gap)
    chain = theorem1_chain(H, rho0, A, config.delta_gap)
    conv = time_convention(config, H)
    sampled = sigma_sq_sampled(H, rho0, A, conv)
    results = asdict(report)
    results["chain"] = dict(asdict(chain), monotone=chain.is_monotone())
    results["sampled"] = sampled._asdict()
    times = conv.sample_times()
    series = {"expectation": expectation_series(H, rho0, A, times)}
    return (
        results,
        report.chain_holds and chain.is_monotone(),
        {"times": times, "columns": series},
    )


def _counterexample(config: ExperimentConfig) -> Tuple[Dict, bool, Dict]:
    H, rho0, A = reimann_counterexample(config.k)
    report = theorem1_report(H, rho0, A, config.delta_gap)
    results = asdict(report)
    results["k"] = config.k
    return results, report.chain_holds and report.tight, {}


def _corollary(config: ExperimentConfig) -> Tuple[Dict, bool, Dict]:
    H = load_hamiltonian(config)
    rho0 = load_state(config, H)
    S = load_measurements(config, H.dimension)
    conv = time_convention(config, H)
    report = corollary_report(S, H, rho0, conv, config.delta_gap)
    times = conv.sample_times()
    per_measurement = distinguishability_series(
        S, H, rho0, dephase(H, rho0), times
    )
    series = {"distinguishability": per_measurement.max(axis=0)}
    return asdict(report), report.holds, {"times": times, "columns": series}


def _subsystem(config: ExperimentConfig) -> Tuple[Dict, bool, Dict]:
    H = load_hamiltonian(config)
    rho0 = load_state(config, H)
    split = BipartiteSplit(**config.split)
    conv = time_convention(config, H)
    chain = subsystem_chain(H, rho0, split, conv, config.delta_gap)
    times = conv.sample_times()
    series = {"distance": distance_series(H, rho0, split, times)}
    return asdict(chain), chain.holds, {"times": times, "columns": series}


def _universality(config: ExperimentConfig) -> Tuple[Dict, bool, Dict]:
    H = load_hamiltonian(config)
    partition = decode_partition(config.partition, H, "partition")
    validation = validate_partition(H, partition)
    if not validation.ok:
        kinds = sorted({v.kind for v in validation.violations})
        raise ConfigError("partition", f"invalid partition: {kinds}")
    if config.subspace >= len(partition):
        raise ConfigError(
            "subspace", f"partition has {len(partition)} subspaces"
        )
    rho0 = load_state(config, H, partition=partition)
    S = load_measurements(config, H.dimension, partition=partition)
    conv = time_convention(config, H)
    report = universality_report(
        S, H, rho0, partition, config.subspace, conv, config.delta_gap
    )
    results = asdict(report)
    results["omega_k"] = encode_complex(report.omega_k.matrix)
    results["subspace"] = partition.labels[config.subspace]
    times = conv.sample_times()
    to_omega_k = distinguishability_series(S, H, rho0, report.omega_k, times)
    series = {"distinguishability": to_omega_k.max(axis=0)}
    return results, report.holds, {"times": times, "columns": series}


@dataclass(frozen=True)
class InstanceRecord:
    """One sweep instance; bound fields are None when the gap check fails."""

    index: int
    dimension: int
    state: str
    gap_passed: bool
    d_eff: Optional[float]
    sigma_sq: Optional[float]
    bound_delta: Optional[float]
    bound_norm: Optional[float]
    ratio: Optional[float]
    subsystem_distance: Optional[float]
    subsystem_stderr: Optional[float]
    subsystem_bound: Optional[float]
    holds: bool


@dataclass(frozen=True)
class ScalingPoint:
    d_B: int
    median_distance: float
    median_bound: float
    median_ratio: float


@dataclass(frozen=True)
class SweepSummary:
    records: Tuple[InstanceRecord, ...]
    aggregate: Dict[str, Any]
    scaling: Tuple[ScalingPoint, ...]

    @property
    def scaling_decreasing(self) -> bool:
        medians = [p.median_distance for p in self.scaling]
        return all(b < a for a, b in zip(medians, medians[1:]))

    @property
    def scaling_within_bound(self) -> bool:
        return all(p.median_ratio <= 1.0 for p in self.scaling)

    @property
    def passed(self) -> bool:
        return (
            self.aggregate["violation_count"] == 0
            and self.scaling_decreasing
            and self.scaling_within_bound
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "records": [asdict(r) for r in self.records],
            "aggregate": self.aggregate,
            "scaling": [asdict(p) for p in self.scaling],
            "scaling_decreasing": self.scaling_decreasing,
            "scaling_within_bound": self.scaling_within_bound,
        }

    def to_json(self) -> str:
        return to_json_text(self.to_dict())


def _sweep_settings(config: ExperimentConfig) -> Dict[str, Any]:
    settings = {**SWEEP_DEFAULTS, **config.sweep}
    settings["scaling"] = {
        **SWEEP_DEFAULTS["scaling"],
        **config.sweep.get("scaling", {}),
    }
    return settings


def _sweep_instance(
    config: ExperimentConfig, settings: Mapping[str, Any], index: int
) -> InstanceRecord:
    dims = settings["dimensions"]
    states = settings["states"]
    d = dims[index % len(dims)]
    kind = states[index % len(states)]
    H = random_hamiltonian(
        d, settings["ensemble"], stream(config.seed, index, "hamiltonian")
    )
    state_rng = stream(config.seed, index, "state")
    rho0 = (
        haar_state(d, state_rng)
        if kind == "haar-pure"
        else random_mixed_state(d, state_rng)
    )
    gaps = check_nondegenerate_gaps(H, config.delta_gap)
    if not gaps.passed:
        logger.info(f"Instance {index} skipped: degenerate gaps")
        return InstanceRecord(
            index=index,
            dimension=d,
            state=kind,
            gap_passed=False,
            d_eff=None,
            sigma_sq=None,
            bound_delta=None,
            bound_norm=None,
            ratio=None,
            subsystem_distance=None,
            subsystem_stderr=None,
            subsystem_bound=None,
            holds=True,
        )

    A = load_observable(config, d, index)
    report = theorem1_report(H, rho0, A, config.delta_gap)
    ratio = (
        report.sigma_sq * 4.0 * report.d_eff / report.delta**2
        if report.delta > 0.0
        else 0.0
    )
    holds = report.chain_holds
    distance = stderr = bound = None
    d_S = settings["subsystem_dim"]
    if d % d_S == 0:
        split = BipartiteSplit(d_S, d // d_S)
        estimate = avg_subsystem_distance(
            H, rho0, split, time_convention(config, H, index)
        )
        distance, stderr = estimate.estimate, estimate.stderr
        bound = subsystem_bound(H, rho0, split, config.delta_gap)
        holds = holds and distance <= bound + 3.0 * stderr
    return InstanceRecord(
        index=index,
        dimension=d,
        state=kind,
        gap_passed=True,
        d_eff=report.d_eff,
        sigma_sq=report.sigma_sq,
        bound_delta=report.bound_delta,
        bound_norm=report.bound_norm,
        ratio=ratio,
        subsystem_distance=distance,
        subsystem_stderr=stderr,
        subsystem_bound=bound,
        holds=holds,
    )


def _scaling_instance(
    config: ExperimentConfig, d_S: int, d_B: int, index: int
) -> Tuple[float, float]:
    # Indices past any regular instance keep the streams disjoint
    key = 1_000_000 * d_B + index
    split = BipartiteSplit(d_S, d_B)
    H = random_hamiltonian(
        split.dimension, "gue", stream(config.seed, key, "scaling")
    )
    rho0 = haar_state(split.dimension, stream(config.seed, key, "state"))
    conv = time_convention(config, H, key)
    estimate = avg_subsystem_distance(H, rho0, split, conv)
    bound = subsystem_bound(H, rho0, split, config.delta_gap)
    return estimate.estimate, bound


def _aggregate(records: List[InstanceRecord]) -> Dict[str, Any]:
    valid = [r for r in records if r.gap_passed]
    scaled = [
        r.subsystem_distance * math.sqrt(r.d_eff)
        for r in valid
        if r.subsystem_distance is not None
    ]
    quantiles = (
        dict(
            zip(
                ("q05", "q50", "q95"),
                np.quantile(scaled, [0.05, 0.5, 0.95]).tolist(),
            )
        )
        if scaled
        else {}
    )
    return {
        "n_instances": len(records),
        "n_gap_failed": len(records) - len(valid),
        "violation_count": sum(not r.holds for r in valid),
        "max_ratio": max((r.ratio for r in valid), default=0.0),
        "subsystem_distance_sqrt_d_eff": quantiles,
    }


def sweep(config: ExperimentConfig) -> SweepSummary:
    """Run a seeded ensemble sweep on a thread pool.

    Instances are keyed by index and merged in index order, so the summary
    is identical for any ``workers`` value.
    """
    settings = _sweep_settings(config)
    n = settings["instances"]
    scaling = settings["scaling"]
    d_S = settings["subsystem_dim"]
    logger.info(
        f"Sweep of {n} instances on {config.workers} workers",
        extra={"seed": config.seed},
    )

    def run_instance(index: int) -> InstanceRecord:
        return _sweep_instance(config, settings, index)

    def run_scaling(job: Tuple[int, int]) -> Tuple[float, float]:
        return _scaling_instance(config, d_S, *job)

    jobs = [
        (d_B, i)
        for d_B in scaling["bath_dims"]
        for i in range(scaling["instances"])
    ]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        records = list(pool.map(run_instance, range(n)))
        outcomes = list(pool.map(run_scaling, jobs))

    points = []
    for d_B in scaling["bath_dims"]:
        rows = np.array(
            [out for (b, _), out in zip(jobs, outcomes) if b == d_B]
        )
        points.append(
            ScalingPoint(
                d_B=d_B,
                median_distance=float(np.median(rows[:, 0])),
                median_bound=float(np.median(rows[:, 1])),
                median_ratio=float(np.median(rows[:, 0] / rows[:, 1])),
            )
        )
    summary = SweepSummary(tuple(records), _aggregate(records), tuple(points))
    logger.info(
        "Sweep finished",
        extra={
            "violations": summary.aggregate["violation_count"],
            "scaling_decreasing": summary.scaling_decreasing,
        },
    )
    return summary


def _sweep(config: ExperimentConfig) -> Tuple[Dict, bool, Dict]:
    summary = sweep(config)
    return summary.to_dict(), summary.passed, {}


MODE_HANDLERS: Dict[
    str, Callable[[ExperimentConfig], Tuple[Dict, bool, Dict]]
] = {
    "check-gaps": _check_gaps,
    "theorem1": _theorem1,
    "corollary": _corollary,
    "subsystem": _subsystem,
    "universality": _universality,
    "counterexample": _counterexample,
    "sweep": _sweep,
}


def run(config: ExperimentConfig) -> RunResult:
    """Run the configured analysis and write its report.

    The JSON report is validated against the mode's report schema before it
    is written to ``<out>/<mode>.json``. With ``series`` set, time series go
    to ``<out>/<mode>.csv``.

    Raises
    ------
    ConfigError
        With the offending field path for invalid configs.
    """
    check_config(config)
    logger.info(f"Running {config.mode}", extra={"seed": config.seed})
    results, passed, series = MODE_HANDLERS[config.mode](config)
    report = {
        "mode": config.mode,
        "seed": config.seed,
        "passed": bool(passed),
        "version": __version__,
        "results": results,
    }
    # Round-trip through the canonical encoder so the schema sees JSON types
    document = json.loads(to_json_text(report))
    validate(event=document, schema=report_schema(config.mode))

    paths = []
    if config.out is not None:
        paths.append(dump_json(report, config.out / f"{config.mode}.json"))
        if config.series and series:
            paths.append(
                write_series_csv(
                    config.out / f"{config.mode}.csv",
                    series["times"],
                    series["columns"],
                )
            )
    logger.info(f"Finished {config.mode}", extra={"passed": passed})
    return RunResult(config.mode, document, bool(passed), tuple(paths))

