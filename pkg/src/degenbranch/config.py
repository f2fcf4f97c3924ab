"""Strict JSON configuration schema for experiments.

A config document is a flat JSON object; unknown keys are rejected and
every bound violation is reported with the dotted field path and the
valid interval, so typos cannot silently change an experiment.
"""

import hashlib
import json

from .exceptions import ConfigError
from .fluctuation import CenteringMode
from .harness import ExperimentConfig
from .stable_motion import StableIndexVector
from .test_functions import GaussianTestFunction

_CENTERING = {m.value: m for m in CenteringMode}

# key -> (required, description used in error messages)
_TOP_KEYS = {
    "alphas": "list of stability indices, each in (0, 2]",
    "gamma": "number > 0",
    "theta": "number > 0",
    "kappa": "number in (0, 1)",
    "n_schedule": "strictly increasing list of integers >= 2",
    "replicates": "integer >= 100",
    "phi": "object {centers, widths, amplitude?}",
    "t_grid": "increasing list of numbers in (0, 1]",
    "box_coef": "number > 0",
    "box_secondary_frac": "number in (0, 1)",
    "particle_budget": "integer > 0",
    "grid_spacing": "number > 0",
    "centering_mode": "one of " + "|".join(sorted(_CENTERING)),
    "master_seed": "integer in [0, 2^64)",
    "refinement_fraction": "number in [0, 1]",
    "refinement_tol": "number > 0",
    "label": "string",
}
_REQUIRED = {"alphas", "gamma", "theta", "kappa", "n_schedule", "replicates", "phi"}
_PHI_KEYS = {"centers", "widths", "amplitude"}


def _require_number(doc, key, lo=None, hi=None, lo_open=False, hi_open=False,
                    integer=False, path=""):
    value = doc[key]
    full = f"{path}{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(full, f"expected a number, got {type(value).__name__}")
    if integer and not isinstance(value, int):
        raise ConfigError(full, f"expected an integer, got {value!r}")
    if lo is not None and (value <= lo if lo_open else value < lo):
        bound = "(" if lo_open else "["
        raise ConfigError(full, f"value {value} below the valid interval "
                                f"{bound}{lo}, {'...' if hi is None else hi})")
    if hi is not None and (value >= hi if hi_open else value > hi):
        bound = ")" if hi_open else "]"
        raise ConfigError(full, f"value {value} outside the valid interval "
                                f"({lo}, {hi}{bound}")
    return value


def _number_list(doc, key, path=""):
    value = doc[key]
    full = f"{path}{key}"
    if not isinstance(value, list) or not value:
        raise ConfigError(full, "expected a non-empty list of numbers")
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(full, f"expected numbers, got {v!r}")
    return value


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a parsed JSON document and build the experiment config."""
    if not isinstance(doc, dict):
        raise ConfigError("$", "top-level document must be an object")
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(key, "unknown key; valid keys: "
                              + ", ".join(sorted(_TOP_KEYS)))
    for key in _REQUIRED:
        if key not in doc:
            raise ConfigError(key, f"required key missing ({_TOP_KEYS[key]})")

    alphas = _number_list(doc, "alphas")
    for i, a in enumerate(alphas):
        if not (0.0 < a <= 2.0):
            raise ConfigError(f"alphas[{i}]",
                              f"value {a} outside the valid interval (0, 2]")
    gamma = _require_number(doc, "gamma", lo=0, lo_open=True)
    theta = _require_number(doc, "theta", lo=0, lo_open=True)
    kappa = _require_number(doc, "kappa", lo=0, hi=1, lo_open=True, hi_open=True)

    schedule = _number_list(doc, "n_schedule")
    for i, n in enumerate(schedule):
        if not isinstance(n, int) or n < 2:
            raise ConfigError(f"n_schedule[{i}]", f"expected an integer >= 2, got {n!r}")
    if any(b <= a for a, b in zip(schedule, schedule[1:])):
        raise ConfigError("n_schedule", "must be strictly increasing")
    replicates = _require_number(doc, "replicates", lo=100, integer=True)

    phi_doc = doc["phi"]
    if not isinstance(phi_doc, dict):
        raise ConfigError("phi", "expected an object {centers, widths, amplitude?}")
    for key in phi_doc:
        if key not in _PHI_KEYS:
            raise ConfigError(f"phi.{key}", "unknown key; valid keys: "
                              + ", ".join(sorted(_PHI_KEYS)))
    for key in ("centers", "widths"):
        if key not in phi_doc:
            raise ConfigError(f"phi.{key}", "required key missing")
        _number_list(phi_doc, key, path="phi.")
    if len(phi_doc["centers"]) != len(alphas) or len(phi_doc["widths"]) != len(alphas):
        raise ConfigError("phi", f"centers/widths must have {len(alphas)} coordinates")
    for i, w in enumerate(phi_doc["widths"]):
        if w <= 0:
            raise ConfigError(f"phi.widths[{i}]",
                              f"value {w} outside the valid interval (0, ...)")
    amplitude = phi_doc.get("amplitude", 1.0)
    if isinstance(amplitude, bool) or not isinstance(amplitude, (int, float)):
        raise ConfigError("phi.amplitude", "expected a number")

    kwargs = {}
    if "t_grid" in doc:
        tg = _number_list(doc, "t_grid")
        for i, t in enumerate(tg):
            if not (0.0 < t <= 1.0):
                raise ConfigError(f"t_grid[{i}]",
                                  f"value {t} outside the valid interval (0, 1]")
        if any(b <= a for a, b in zip(tg, tg[1:])):
            raise ConfigError("t_grid", "must be strictly increasing")
        kwargs["t_grid"] = tuple(tg)
    if "box_coef" in doc:
        kwargs["box_coef"] = _require_number(doc, "box_coef", lo=0, lo_open=True)
    if "box_secondary_frac" in doc:
        kwargs["box_secondary_frac"] = _require_number(
            doc, "box_secondary_frac", lo=0, hi=1, lo_open=True, hi_open=True)
    if "particle_budget" in doc:
        kwargs["particle_budget"] = _require_number(
            doc, "particle_budget", lo=1, integer=True)
    if "grid_spacing" in doc:
        kwargs["grid_spacing"] = _require_number(doc, "grid_spacing", lo=0, lo_open=True)
    if "centering_mode" in doc:
        mode = doc["centering_mode"]
        if mode not in _CENTERING:
            raise ConfigError("centering_mode",
                              f"unknown mode {mode!r}; valid: "
                              + ", ".join(sorted(_CENTERING)))
        kwargs["centering_mode"] = _CENTERING[mode]
    if "master_seed" in doc:
        kwargs["master_seed"] = _require_number(
            doc, "master_seed", lo=0, hi=2**64 - 1, integer=True)
    if "refinement_fraction" in doc:
        kwargs["refinement_fraction"] = _require_number(
            doc, "refinement_fraction", lo=0, hi=1)
    if "refinement_tol" in doc:
        kwargs["refinement_tol"] = _require_number(
            doc, "refinement_tol", lo=0, lo_open=True)
    if "label" in doc:
        if not isinstance(doc["label"], str):
            raise ConfigError("label", "expected a string")
        kwargs["label"] = doc["label"]

    return ExperimentConfig(
        indices=StableIndexVector(tuple(float(a) for a in alphas)),
        gamma=float(gamma),
        theta=float(theta),
        kappa=float(kappa),
        n_schedule=tuple(schedule),
        replicates=int(replicates),
        phi=GaussianTestFunction(tuple(float(c) for c in phi_doc["centers"]),
                                 tuple(float(w) for w in phi_doc["widths"]),
                                 float(amplitude)),
        **kwargs,
    )


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("$", f"not valid JSON: {exc}") from exc
    return parse_config(doc)


def config_to_dict(config: ExperimentConfig) -> dict:
    """Round-trippable echo of a config (parse_config inverts it)."""
    return {
        "alphas": list(config.indices.alphas),
        "gamma": config.gamma,
        "theta": config.theta,
        "kappa": config.kappa,
        "n_schedule": list(config.n_schedule),
        "replicates": config.replicates,
        "phi": {
            "centers": list(config.phi.centers),
            "widths": list(config.phi.widths),
            "amplitude": config.phi.amplitude,
        },
        "t_grid": list(config.t_grid),
        "box_coef": config.box_coef,
        "box_secondary_frac": config.box_secondary_frac,
        "particle_budget": config.particle_budget,
        "grid_spacing": config.grid_spacing,
        "centering_mode": config.centering_mode.value,
        "master_seed": config.master_seed,
        "refinement_fraction": config.refinement_fraction,
        "refinement_tol": config.refinement_tol,
        "label": config.label,
    }


def config_digest(config: ExperimentConfig) -> str:
    payload = json.dumps(config_to_dict(config), sort_keys=True,
                         separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()
