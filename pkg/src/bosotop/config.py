"""Experiment configuration: strict JSON schema, defaults, presets."""
import copy
import json
import warnings
from importlib import resources

import jsonschema
import numpy as np

from .errors import ValidationError
from .nambu import BlochBdg, SIGMA3, build_prototype_bloch

EXPERIMENTS = ("bands", "winding", "polarization", "correlation", "obc", "disorder",
               "stability", "symmetry", "reduce")

DEFAULTS = {
    "k_points": 201,
    "regularization": 0.0,
    "lambdas": 11,
    "n_bands": None,
    "kappa": None,
    "cell": 1,
    "omega_points": 4000,
    "chain": {"L": 100, "boundary": "Open"},
    "t2_values": None,
    "disorder": {"kind": "Hopping", "D_values": [0.0, 0.1, 0.2, 0.3], "n_samples": 100},
    "symmetry": {},
    "seed": 0,
    "tolerances": {"tol_pd": 1e-12, "tol_sym": 1e-9, "tol_wind": 1e-6, "tol_env": 1e-3,
                   "threshold_ratio": 2.0},
}


def _schema():
    return json.loads(resources.files("bosotop").joinpath("config_schema.json").read_text())


def preset_names():
    folder = resources.files("bosotop").joinpath("presets")
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def load_preset(name):
    path = resources.files("bosotop").joinpath("presets", f"{name}.json")
    if not path.is_file():
        raise ValidationError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return json.loads(path.read_text())


def load_config_file(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from None


def validate_raw(raw):
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"config error at {where}: {exc.message}") from None


def _merge(base, extra):
    out = copy.deepcopy(base)
    for key, val in extra.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def resolve(raw, experiment=None, overrides=None):
    """Validate ``raw`` and fill every default.

    ``overrides`` (e.g. from CLI flags) are applied before validation; keys
    with value ``None`` are ignored.
    """
    raw = copy.deepcopy(raw)
    for key, val in (overrides or {}).items():
        if val is not None:
            raw[key] = val
    validate_raw(raw)
    if experiment is not None:
        if raw.get("experiment", experiment) != experiment:
            raise ValidationError(f"config is for experiment {raw['experiment']!r}, "
                                  f"not {experiment!r}")
        raw["experiment"] = experiment
    if "experiment" not in raw:
        raise ValidationError("no experiment given (config key 'experiment' or a subcommand)")
    cfg = _merge(DEFAULTS, raw)
    model = cfg["model"]
    if model["type"] == "prototype":
        model.setdefault("xi_abs", 0.0)
        model.setdefault("xi_phase", 0.0)
        if model["xi_abs"] >= model["mu"]:
            raise ValidationError("model.xi_abs must be smaller than model.mu")
        if cfg["kappa"] is None:
            cfg["kappa"] = 0.006 * model["t1"]
        if cfg["t2_values"] is None:
            cfg["t2_values"] = [model["t2"]]
    elif cfg["experiment"] in ("correlation", "obc", "disorder"):
        raise ValidationError(f"experiment {cfg['experiment']!r} needs a prototype model")
    build_bloch(cfg)
    return cfg


def parse_matrix(rows):
    """Nested lists of numbers or ``[re, im]`` pairs to a complex array."""
    try:
        return np.array([[complex(*e) if isinstance(e, list) else complex(e) for e in row]
                         for row in rows])
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad matrix entry: {exc}") from None


def build_bloch(cfg):
    """The :class:`BlochBdg` described by a resolved config (regularization applied)."""
    model = cfg["model"]
    if model["type"] == "prototype":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            bloch = build_prototype_bloch(model["mu"], model["t1"], model["t2"], model["xi_abs"],
                                          model["xi_phase"], cfg["k_points"])
    else:
        K = [parse_matrix(m) for m in model["K"]]
        M = [parse_matrix(m) for m in model["M"]]
        if len({m.shape for m in K + M}) != 1:
            raise ValidationError("all K and M blocks must have the same square shape")
        bloch = BlochBdg(np.array(K), np.array(M))
    if cfg["regularization"] > 0:
        bloch = bloch.shifted(cfg["regularization"])
    return bloch


def sublattice_matrix(cfg, n_modes):
    S = cfg["symmetry"].get("S_tilde")
    if S is not None:
        S = parse_matrix(S)
    elif cfg["model"]["type"] == "prototype":
        S = SIGMA3
    else:
        return None
    if S.shape != (n_modes, n_modes):
        raise ValidationError(f"S_tilde must be {n_modes}x{n_modes}")
    return S


def time_reversal_matrix(cfg, n_modes):
    T = cfg["symmetry"].get("T_tilde")
    if T is None:
        if cfg["model"]["type"] == "prototype":
            return np.exp(1j * cfg["model"]["xi_phase"]) * np.eye(n_modes)
        return np.eye(n_modes)
    T = parse_matrix(T)
    if T.shape != (n_modes, n_modes):
        raise ValidationError(f"T_tilde must be {n_modes}x{n_modes}")
    return T
