"""Run configuration: defaults table, file loading and validation.

Configs are TOML (or JSON) documents.  Every key has a default in
``DEFAULTS``; unknown keys are rejected so typos surface as errors.
Validation errors name the offending key path, and syntax errors carry
the line and column reported by the decoder.
"""
from __future__ import annotations

import copy
import json
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = "", line: int | None = None, column: int | None = None):
        where = path or ""
        if line is not None:
            where = f"{where}:{line}:{column}" if where else f"line {line}, column {column}"
        super().__init__(f"{where}: {message}" if where else message)
        self.path, self.line, self.column = path, line, column


# Key -> default.  ``0`` means "derive automatically" where noted in README.
DEFAULTS: dict = {
    "seed": 0,
    "threads": 1,
    "problem": {
        "function": "exp(z1*z2)",
        "weights": ["abs(z2)+1", "abs(z1)+1"],
        "arity": 2,
    },
    "grid": {
        "angular_resolution": 64,
        "radial_resolution": 8,
        "refinement_depth": 12,
        "sample_cap": 1_000_000,
    },
    "eval": {"points": []},
    "deriv": {"point": [], "max_order": 2, "method": "both", "rtol": 1e-8},
    "index": {
        "center": [],
        "radius": [10.0],
        "angular_resolution": 8,
        "radial_resolution": 6,
        "m_max": 6,
        "j_max": 0,
        "rtol": 1e-9,
        "method": "symbolic",
        "local": False,
        "R_inner": [0.5],
        "R_outer": [3.5],
        "local_moduli": [2.0, 8.0],
    },
    "classify": {
        "class": "both",
        "R": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        "z0_center": [],
        "z0_radius": [10.0],
        "z0_angular_resolution": 16,
        "z0_radial_resolution": 11,
        "r_seq": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        "blowup": 1e6,
        "growth_factor": 10.0,
    },
    "growth": {
        "directions": [[1.0]],
        "K": 7,
        "r_seq": [],
        "N": 0,
        "R0": [1.0],
        "mode": "verbatim",
        "pivot": 0,
        "theta_resolution": 0,
        "rtol": 1e-6,
        "tol": 1e-6,
        "factors": [0.5, 1.0, 2.0, 4.0],
    },
    "gap": {"N": 2, "C": 1.0},
    "convexity": {"r_min": 0.5, "r_max": 8.0, "points": 16},
}


def _check_types(value, default, path: str):
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError("expected a table", path)
        for key in value:
            if key not in default:
                raise ConfigError(f"unknown key {key!r}", f"{path}.{key}" if path else key)
        for key, sub in default.items():
            if key in value:
                _check_types(value[key], sub, f"{path}.{key}" if path else key)
        return
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif isinstance(default, str):
        ok = isinstance(value, str)
    else:
        ok = isinstance(value, list)
    if not ok:
        raise ConfigError(f"expected {type(default).__name__}, got {type(value).__name__}", path)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _normalize(cfg: dict) -> dict:
    # floats stay floats so the echo re-loads with identical types
    def walk(value, default):
        if isinstance(default, dict):
            return {k: walk(value[k], default[k]) for k in default}
        if isinstance(default, float) and not isinstance(default, bool):
            return float(value)
        return value

    return walk(cfg, DEFAULTS)


def parse_complex(value, path: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError("expected a number or complex string", path)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError:
            pass
    raise ConfigError(f"cannot read {value!r} as a complex number", path)


def point(values, n: int, path: str) -> list[complex]:
    """Empty list means the origin."""
    if values == []:
        return [0j] * n
    if not isinstance(values, list) or len(values) != n:
        raise ConfigError(f"expected a list of {n} coordinates", path)
    return [parse_complex(v, f"{path}[{i}]") for i, v in enumerate(values)]


def radius(values, n: int, path: str, positive: bool = False) -> list[float]:
    """A single number (or one-element list) is broadcast to all coordinates."""
    if isinstance(values, (int, float)) and not isinstance(values, bool):
        values = [values]
    if isinstance(values, list) and len(values) == 1:
        values = values * n
    if not isinstance(values, list) or len(values) != n:
        raise ConfigError(f"expected {n} radii", path)
    out = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0 or (positive and v == 0):
            raise ConfigError("radii must be " + ("positive" if positive else "nonnegative") + " numbers", f"{path}[{i}]")
        out.append(float(v))
    return out


def positive(value, path: str):
    if value <= 0:
        raise ConfigError("must be positive", path)
    return value


def validate(cfg: dict) -> dict:
    """Type-check against ``DEFAULTS`` and check cross-field invariants."""
    _check_types(cfg, DEFAULTS, "")
    p = cfg["problem"]
    n = p["arity"]
    if n < 1:
        raise ConfigError("arity must be >= 1", "problem.arity")
    if len(p["weights"]) != n or not all(isinstance(w, str) for w in p["weights"]):
        raise ConfigError(f"need {n} weight expressions (one per variable)", "problem.weights")
    for key in ("angular_resolution", "radial_resolution", "sample_cap"):
        positive(cfg["grid"][key], f"grid.{key}")
    if cfg["grid"]["refinement_depth"] < 0:
        raise ConfigError("must be >= 0", "grid.refinement_depth")
    if cfg["threads"] < 1:
        raise ConfigError("must be >= 1", "threads")
    for section, keys in {
        "deriv": ("rtol",),
        "index": ("rtol",),
        "classify": ("blowup", "growth_factor"),
        "growth": ("rtol", "tol"),
    }.items():
        for key in keys:
            positive(cfg[section][key], f"{section}.{key}")
    if cfg["deriv"]["method"] not in ("symbolic", "cauchy", "both"):
        raise ConfigError("must be 'symbolic', 'cauchy' or 'both'", "deriv.method")
    if cfg["index"]["method"] not in ("symbolic", "cauchy"):
        raise ConfigError("must be 'symbolic' or 'cauchy'", "index.method")
    if cfg["classify"]["class"] not in ("Q", "K", "both"):
        raise ConfigError("must be 'Q', 'K' or 'both'", "classify.class")
    if cfg["growth"]["mode"] not in ("verbatim", "ordered"):
        raise ConfigError("must be 'verbatim' or 'ordered'", "growth.mode")
    if not cfg["growth"]["directions"]:
        raise ConfigError("at least one direction is required", "growth.directions")
    r_seq = cfg["growth"]["r_seq"]
    if r_seq and any(b <= a for a, b in zip(r_seq, r_seq[1:])):
        raise ConfigError("must be strictly increasing", "growth.r_seq")
    if not r_seq and cfg["growth"]["K"] < 1:
        raise ConfigError("must be >= 1", "growth.K")
    if cfg["gap"]["N"] < 0 or cfg["gap"]["C"] < 0:
        raise ConfigError("N and C must be nonnegative", "gap")
    c = cfg["convexity"]
    if not 0 < c["r_min"] < c["r_max"]:
        raise ConfigError("need 0 < r_min < r_max", "convexity")
    if c["points"] < 3:
        raise ConfigError("need at least 3 points", "convexity.points")
    return cfg


def _decode(text: str, source: str) -> dict:
    if source.endswith(".json"):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, source, exc.lineno, exc.colno) from None
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc), source) from None


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the file (if any), then ``overrides``; validated."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
        data = _decode(text, str(path))
        if not isinstance(data, dict):
            raise ConfigError("top level must be a table", str(path))
        _check_types(data, DEFAULTS, "")
        cfg = _merge(cfg, data)
    if overrides:
        cfg = _merge(cfg, overrides)
    return _normalize(validate(cfg))
