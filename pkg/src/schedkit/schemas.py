"""JSON schemas for every file the toolkit writes."""

from jsonschema import Draft202012Validator

_number_array = {"type": "array", "items": {"type": "number"}}

SCHEDULE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "noise schedule",
    "type": "object",
    "required": ["format_version", "family", "T", "params", "alpha_bar_floor", "betas", "alpha_bars",
                 "observation_times", "clamped_indices"],
    "properties": {
        "format_version": {"const": 1},
        "family": {"type": "string"},
        "T": {"type": "integer", "minimum": 1},
        "params": {"type": "object"},
        "alpha_bar_floor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "betas": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "alpha_bars": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
        "observation_times": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "clamped_indices": {"type": "array", "items": {"type": "integer", "minimum": 1}},
    },
    "additionalProperties": False,
}

REPRESENTATION = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "single schedule representation",
    "type": "object",
    "required": ["format_version", "representation", "T", "alpha_bar_floor", "values"],
    "properties": {
        "format_version": {"const": 1},
        "representation": {"enum": ["betas", "alpha-bars", "times"]},
        "T": {"type": "integer", "minimum": 1},
        "alpha_bar_floor": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "values": _number_array,
    },
    "additionalProperties": False,
}

_nullable_number = {"type": ["number", "null"]}

REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "equivalence report",
    "type": "object",
    "required": ["format_version", "schedule", "config", "per_step", "increment_checks", "verdict"],
    "properties": {
        "format_version": {"const": 1},
        "schedule": SCHEDULE,
        "config": {
            "type": "object",
            "required": ["n_samples", "seed", "x0", "scheme"],
            "properties": {
                "n_samples": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer"},
                "x0": {"oneOf": [
                    {"type": "number"},
                    {"type": "object", "required": ["mean", "variance"],
                     "properties": {"mean": {"type": "number"}, "variance": {"type": "number"}}},
                ]},
                "scheme": {"enum": ["independent", "paired"]},
            },
        },
        "alpha_level": {"type": "number"},
        "correction": {"enum": ["none", "sidak"]},
        "backend": {"type": "string"},
        "identity_error": {"type": "number"},
        "underpowered": {"type": "boolean"},
        "per_step": {"type": "array", "items": {
            "type": "object",
            "required": ["k", "t_k", "ks_statistic", "ks_threshold", "mean_ddpm", "mean_ou", "var_ddpm", "var_ou"],
            "properties": {
                "k": {"type": "integer", "minimum": 1},
                "t_k": {"type": "number"},
                "ks_statistic": _nullable_number,
                "ks_threshold": {"type": "number"},
                "mean_ddpm": {"type": "number"},
                "mean_ou": {"type": "number"},
                "var_ddpm": {"type": "number"},
                "var_ou": {"type": "number"},
            },
        }},
        "increment_checks": {"type": "array", "items": {
            "type": "object",
            "required": ["k", "standardized_increment_ks"],
            "properties": {"k": {"type": "integer"}, "standardized_increment_ks": _nullable_number},
        }},
        "verdict": {"enum": ["pass", "fail"]},
        "failures": {"type": "array", "items": {"type": "integer"}},
        "notes": {"type": "array", "items": {"type": "string"}},
        "warnings": {"type": "array", "items": {"type": "string"}},
    },
}

COMPARE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "family comparison table",
    "type": "object",
    "required": ["format_version", "T", "families", "k", "columns"],
    "properties": {
        "format_version": {"const": 1},
        "T": {"type": "integer", "minimum": 1},
        "families": {"type": "array", "items": {"type": "string"}},
        "k": {"type": "array", "items": {"type": "integer"}},
        "columns": {"type": "object", "additionalProperties": {
            "type": "object", "required": ["betas", "alpha_bars"],
            "properties": {"betas": _number_array, "alpha_bars": _number_array},
        }},
    },
}

SCALING = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "scaling check",
    "type": "object",
    "required": ["format_version", "family", "T", "M", "max_gap", "gaps"],
    "properties": {
        "format_version": {"const": 1},
        "family": {"type": "string"},
        "T": {"type": "integer"},
        "M": {"type": "integer", "minimum": 2},
        "max_gap": {"type": "number", "minimum": 0},
        "gaps": _number_array,
    },
}

FEASIBILITY = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "mutual-information feasibility report",
    "type": "object",
    "required": ["format_version", "sigma0_sq", "initial_entropy", "rhs_in_unit_interval",
                 "monotone_increasing_rhs", "feasible", "points"],
    "properties": {
        "format_version": {"const": 1},
        "sigma0_sq": {"type": "number"},
        "initial_entropy": {"type": "number"},
        "rhs_in_unit_interval": {"type": "boolean"},
        "monotone_increasing_rhs": {"type": "boolean"},
        "feasible": {"type": "boolean"},
        "points": {"type": "array", "minItems": 1, "items": {
            "type": "object", "required": ["t", "mutual_information", "rhs", "in_unit_interval"],
            "properties": {"t": {"type": "number"}, "mutual_information": {"type": "number"},
                           "rhs": {"type": "number"}, "in_unit_interval": {"type": "boolean"}},
        }},
    },
}

ALL = {
    "schedule": SCHEDULE,
    "representation": REPRESENTATION,
    "report": REPORT,
    "compare": COMPARE,
    "scaling": SCALING,
    "feasibility": FEASIBILITY,
}


def validator(name: str) -> Draft202012Validator:
    return Draft202012Validator(ALL[name])


def validate(name: str, document) -> None:
    """Raise ``jsonschema.ValidationError`` if ``document`` does not match."""
    validator(name).validate(document)
