"""JSON Schemas for experiment configs and the reports the harness writes."""

MODES = [
    "check-gaps",
    "theorem1",
    "corollary",
    "subsystem",
    "universality",
    "counterexample",
    "sweep",
]

_COMPLEX_ARRAY = {"type": "array"}

_HAMILTONIAN = {
    "type": "object",
    "properties": {
        "file": {"type": "string", "minLength": 1},
        "matrix": _COMPLEX_ARRAY,
        "energies": {"type": "array", "items": {"type": "number"}},
        "eigenvectors": _COMPLEX_ARRAY,
        "ensemble": {"enum": ["gue", "spaced-spectrum"]},
        "dimension": {"type": "integer", "minimum": 2},
        "delta_deg": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

_STATE = {
    "type": "object",
    "properties": {
        "source": {
            "enum": [
                "file",
                "inline",
                "haar-pure",
                "haar-mixed",
                "eigenmix",
                "eigenstate",
                "in-subspace",
            ]
        },
        "file": {"type": "string", "minLength": 1},
        "vector": _COMPLEX_ARRAY,
        "matrix": _COMPLEX_ARRAY,
        "n_levels": {"type": "integer", "minimum": 1},
        "level": {"type": "integer", "minimum": 0},
        "rank": {"type": "integer", "minimum": 1},
    },
    "required": ["source"],
    "additionalProperties": False,
}

_OBSERVABLE = {
    "type": "object",
    "properties": {
        "file": {"type": "string", "minLength": 1},
        "matrix": _COMPLEX_ARRAY,
        "random": {"enum": ["complex", "hermitian"]},
    },
    "additionalProperties": False,
}

_POVM = {
    "type": "object",
    "properties": {
        "label": {"type": "string"},
        "outcomes": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "properties": {
                    "result": {"type": ["string", "integer"]},
                    "matrix": _COMPLEX_ARRAY,
                },
                "required": ["matrix"],
            },
        },
    },
    "required": ["outcomes"],
}

_MEASUREMENTS = {
    "type": "object",
    "properties": {
        "file": {"type": "string", "minLength": 1},
        "povms": {"type": "array", "minItems": 1, "items": _POVM},
        "random": {
            "type": "object",
            "properties": {
                "count": {"type": "integer", "minimum": 1},
                "outcomes": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "partition": {
            "type": "object",
            "properties": {
                "perturbation": {
                    "type": "number",
                    "minimum": 0,
                    "maximum": 1,
                }
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_PARTITION = {
    "type": "object",
    "properties": {
        "band_edges": {"type": "array", "items": {"type": "number"}},
        "projectors": {"type": "array", "minItems": 1},
        "labels": {"type": "array", "items": {"type": "string"}},
        "delta_deg": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

_CONVENTION = {
    "type": "object",
    "properties": {
        "t_max": {"type": "number", "exclusiveMinimum": 0},
        "n_samples": {"type": "integer", "minimum": 1},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
    },
    "additionalProperties": False,
}

_SWEEP = {
    "type": "object",
    "properties": {
        "instances": {"type": "integer", "minimum": 1},
        "dimensions": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "integer", "minimum": 2},
        },
        "ensemble": {"enum": ["gue", "spaced-spectrum"]},
        "states": {
            "type": "array",
            "minItems": 1,
            "items": {"enum": ["haar-pure", "haar-mixed"]},
        },
        "subsystem_dim": {"type": "integer", "minimum": 2},
        "scaling": {
            "type": "object",
            "properties": {
                "bath_dims": {
                    "type": "array",
                    "minItems": 2,
                    "items": {"type": "integer", "minimum": 1},
                },
                "instances": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "eqlab experiment config",
    "type": "object",
    "properties": {
        "mode": {"enum": MODES},
        "seed": {"type": "integer", "minimum": 0},
        "out": {"type": "string"},
        "workers": {"type": "integer", "minimum": 1},
        "k": {"type": "integer", "minimum": 1},
        "hamiltonian": _HAMILTONIAN,
        "state": _STATE,
        "observable": _OBSERVABLE,
        "measurements": _MEASUREMENTS,
        "partition": _PARTITION,
        "subspace": {"type": "integer", "minimum": 0},
        "split": {
            "type": "object",
            "properties": {
                "d_S": {"type": "integer", "minimum": 2},
                "d_B": {"type": "integer", "minimum": 1},
            },
            "required": ["d_S", "d_B"],
            "additionalProperties": False,
        },
        "convention": _CONVENTION,
        "delta_gap": {"type": "number", "exclusiveMinimum": 0},
        "sweep": _SWEEP,
        "series": {"type": "boolean"},
    },
    "required": ["mode"],
    "additionalProperties": False,
}

# Results of each mode must carry at least these keys
REPORT_FIELDS = {
    "check-gaps": ["passed", "tolerance", "n_levels", "violations"],
    "theorem1": [
        "sigma_sq",
        "bound_delta",
        "bound_norm",
        "d_eff",
        "delta",
        "chain",
        "sampled",
    ],
    "corollary": ["bound_weighted", "bound_count", "empirical_avg", "d_eff"],
    "subsystem": ["distance", "stderr", "bound", "d_eff"],
    "universality": ["epsilon", "bound", "empirical_avg", "d_eff"],
    "counterexample": [
        "k",
        "sigma_sq",
        "delta",
        "d_eff",
        "purity",
        "reimann_purity_bound",
        "tight",
    ],
    "sweep": ["records", "aggregate", "scaling"],
}


def report_schema(mode: str) -> dict:
    """Schema of the JSON report written for ``mode``."""
    return {
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": f"eqlab {mode} report",
        "type": "object",
        "properties": {
            "mode": {"const": mode},
            "seed": {"type": "integer", "minimum": 0},
            "passed": {"type": "boolean"},
            "version": {"type": "string"},
            "results": {
                "type": "object",
                "required": REPORT_FIELDS[mode],
            },
        },
        "required": ["mode", "seed", "passed", "version", "results"],
    }
