"""JSON experiment configuration: schema, semantic validation, and
construction of the in-memory parameter objects.

The schema is versioned; unknown fields are rejected with a JSON pointer so
batch configs fail loudly instead of silently ignoring typos.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import jsonschema

from . import kernels, levy, matfun
from .errors import (
    EigenvalueOutOfRange,
    InvalidRegime,
    NonDiagonalizableWithoutJordanInput,
    SchemaError,
    ValidationError,
)

SCHEMA_VERSION = 1

_matrix = {"type": "array", "minItems": 1,
           "items": {"type": "array", "items": {"type": "number"}, "minItems": 1}}
_vector = {"type": "array", "items": {"type": "number"}, "minItems": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "process", "measure", "grid"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "process": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "hurst", "kernel"],
            "properties": {
                "kind": {"enum": ["maofLm", "rhofLm", "ofbm"]},
                "hurst": _matrix,
                "kernel": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["variant"],
                    "properties": {
                        "variant": {"enum": ["general", "half", "fourier"]},
                        "M_plus": _matrix, "M_minus": _matrix,
                        "M": _matrix, "N": _matrix,
                        "A_real": _matrix, "A_imag": _matrix,
                    },
                },
            },
        },
        "measure": {
            "type": "object",
            "additionalProperties": False,
            "required": ["variant"],
            "properties": {
                "variant": {"enum": ["discrete", "gaussian", "tempered_opstable"]},
                "atoms": {"type": "array", "minItems": 1, "items": {
                    "type": "object", "additionalProperties": False,
                    "required": ["z", "w"],
                    "properties": {"z": _vector, "w": {"type": "number", "exclusiveMinimum": 0}},
                }},
                "sigma": _matrix,
                "rate": {"type": "number", "exclusiveMinimum": 0},
                "B": _matrix,
                "sphere_atoms": {"type": "array", "minItems": 1, "items": {
                    "type": "object", "additionalProperties": False,
                    "required": ["theta", "w"],
                    "properties": {"theta": _vector, "w": {"type": "number", "exclusiveMinimum": 0}},
                }},
                "tempering": {
                    "type": "object", "additionalProperties": False,
                    "required": ["kind", "value"],
                    "properties": {"kind": {"enum": ["indicator", "exponential"]},
                                   "value": {"type": "number", "exclusiveMinimum": 0}},
                },
                "normalized": {"type": "boolean"},
            },
        },
        "grid": {
            "type": "object", "additionalProperties": False,
            "required": ["times"],
            "properties": {"times": {"type": "array", "minItems": 1,
                                     "items": {"type": "number"}}},
        },
        "simulation": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "replications": {"type": "integer", "minimum": 1},
                "window": {"type": ["object", "null"], "additionalProperties": False,
                           "properties": {"lo": {"type": "number"}, "hi": {"type": "number"}},
                           "required": ["lo", "hi"]},
                "small_jump_eps": {"type": "number", "exclusiveMinimum": 0},
                "gaussian_tail": {"type": "boolean"},
                "gaussian_small_jumps": {"type": "boolean"},
            },
        },
        "experiment": {"type": "object"},
        "tolerances": {
            "type": "object", "additionalProperties": False,
            "properties": {"quadrature": {"type": "number", "exclusiveMinimum": 0},
                           "reversibility": {"type": "number", "exclusiveMinimum": 0}},
        },
    },
}

_validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    digest: str
    kind: str                      # 'maofLm' | 'rhofLm' | 'ofbm'
    p: int
    hurst: matfun.HurstSpec
    time_params: kernels.TimeKernelParams | None
    fourier_params: kernels.FourierKernelParams | None
    measure: object                # LevyMeasureSpec (time) or ComplexLevyView
    times: np.ndarray
    replications: int = 1
    window: tuple | None = None
    small_jump_eps: float = 1e-3
    gaussian_tail: bool = True
    gaussian_small_jumps: bool = True
    experiment: dict = field(default_factory=dict)
    quad_tol: float = 1e-10
    reversibility_tol: float = 1e-9


def config_digest(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _matrix_of(node, pointer):
    M = np.asarray(node, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("matrix must be square", pointer)
    return M


def _build_measure(node, p, kind, pointer="/measure"):
    q = p if kind == "maofLm" else 2 * p
    variant = node["variant"]
    try:
        if variant == "discrete":
            if "atoms" not in node:
                raise ValidationError("discrete measure needs atoms", pointer)
            atoms = np.array([a["z"] for a in node["atoms"]], dtype=float)
            weights = np.array([a["w"] for a in node["atoms"]], dtype=float)
            if atoms.shape[1] != q:
                raise ValidationError(f"atoms must have dimension {q}", pointer + "/atoms")
            mu = levy.DiscreteMeasure(atoms, weights)
        elif variant == "gaussian":
            if "sigma" not in node or "rate" not in node:
                raise ValidationError("gaussian measure needs sigma and rate", pointer)
            S = _matrix_of(node["sigma"], pointer + "/sigma")
            if S.shape[0] != q:
                raise ValidationError(f"sigma must be {q} x {q}", pointer + "/sigma")
            mu = levy.GaussianJumps(S, float(node["rate"]))
        else:
            for key in ("B", "sphere_atoms", "tempering"):
                if key not in node:
                    raise ValidationError(f"tempered_opstable measure needs {key}", pointer)
            B = _matrix_of(node["B"], pointer + "/B")
            if B.shape[0] != q:
                raise ValidationError(f"B must be {q} x {q}", pointer + "/B")
            thetas = np.array([a["theta"] for a in node["sphere_atoms"]], dtype=float)
            lw = np.array([a["w"] for a in node["sphere_atoms"]], dtype=float)
            t = node["tempering"]
            mu = levy.TemperedOpStable(B, thetas, lw, levy.Tempering(t["kind"], t["value"]))
    except ValueError as exc:
        raise ValidationError(str(exc), pointer) from exc
    if kind == "maofLm":
        if node.get("normalized"):
            mu = levy.normalize_time_measure(mu)
        return mu
    view = levy.ComplexLevyView(mu)
    if node.get("normalized"):
        view = levy.normalize_complex_measure(view)
    return view


def parse_config(source) -> ExperimentConfig:
    """Validate and build a configuration from a path, JSON string, or dict."""
    if isinstance(source, (str, Path)) and not str(source).lstrip().startswith("{"):
        path = Path(source)
        if not path.exists():
            raise SchemaError(f"config file {path} does not exist", "")
        raw = json.loads(path.read_text())
    elif isinstance(source, str):
        raw = json.loads(source)
    else:
        raw = source
    errors = sorted(_validator.iter_errors(raw), key=lambda e: e.json_path)
    if errors:
        e = errors[0]
        pointer = "/" + "/".join(str(x) for x in e.absolute_path)
        raise SchemaError(f"{e.message} (at {pointer})", pointer)

    proc = raw["process"]
    H = _matrix_of(proc["hurst"], "/process/hurst")
    try:
        hurst = matfun.validate_hurst(H)
    except EigenvalueOutOfRange as exc:
        raise ValidationError(str(exc), "/process/hurst") from exc
    except NonDiagonalizableWithoutJordanInput as exc:
        raise ValidationError(str(exc), "/process/hurst") from exc
    p = hurst.p
    kern = proc["kernel"]
    kind = proc["kind"]
    time_params = fourier_params = None
    try:
        if kern["variant"] == "general":
            if "M_plus" not in kern or "M_minus" not in kern:
                raise ValidationError("general kernel needs M_plus and M_minus",
                                      "/process/kernel")
            time_params = kernels.general_time_params(
                hurst, _matrix_of(kern["M_plus"], "/process/kernel/M_plus"),
                _matrix_of(kern["M_minus"], "/process/kernel/M_minus"))
        elif kern["variant"] == "half":
            if "M" not in kern or "N" not in kern:
                raise ValidationError("half kernel needs M and N", "/process/kernel")
            time_params = kernels.half_time_params(
                hurst, _matrix_of(kern["M"], "/process/kernel/M"),
                _matrix_of(kern["N"], "/process/kernel/N"))
        else:
            if "A_real" not in kern:
                raise ValidationError("fourier kernel needs A_real (and optional A_imag)",
                                      "/process/kernel")
            A = _matrix_of(kern["A_real"], "/process/kernel/A_real").astype(complex)
            if "A_imag" in kern:
                A = A + 1j * _matrix_of(kern["A_imag"], "/process/kernel/A_imag")
            fourier_params = kernels.fourier_params(hurst, A)
    except InvalidRegime as exc:
        raise ValidationError(str(exc), "/process/kernel") from exc
    if kind in ("maofLm", "ofbm") and time_params is None:
        raise ValidationError(f"{kind} requires a time-domain kernel", "/process/kernel")
    if kind == "rhofLm" and fourier_params is None:
        raise ValidationError("rhofLm requires the fourier kernel variant", "/process/kernel")

    measure = _build_measure(raw["measure"], p, "maofLm" if kind in ("maofLm", "ofbm")
                             else "rhofLm")
    times = np.asarray(raw["grid"]["times"], dtype=float)
    sim = raw.get("simulation", {})
    window = sim.get("window")
    tol = raw.get("tolerances", {})
    return ExperimentConfig(
        raw=raw, digest=config_digest(raw), kind=kind, p=p, hurst=hurst,
        time_params=time_params, fourier_params=fourier_params, measure=measure,
        times=times,
        replications=int(sim.get("replications", 1)),
        window=None if window is None else (float(window["lo"]), float(window["hi"])),
        small_jump_eps=float(sim.get("small_jump_eps", 1e-3)),
        gaussian_tail=bool(sim.get("gaussian_tail", True)),
        gaussian_small_jumps=bool(sim.get("gaussian_small_jumps", True)),
        experiment=dict(raw.get("experiment", {})),
        quad_tol=float(tol.get("quadrature", 1e-10)),
        reversibility_tol=float(tol.get("reversibility", 1e-9)),
    )
