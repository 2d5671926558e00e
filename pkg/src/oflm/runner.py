"""Batch subcommand implementations shared by the HTTP service and the CLI:
each one turns a validated configuration into numeric results plus CSV/JSON
artifacts with provenance."""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np
import scipy

from . import covariance, levy, limits, matfun, mcstats, simulate, timerev
from . import __version__
from .config import ExperimentConfig, parse_config
from .errors import (
    FourthMomentDiverged,
    GridTooCoarse,
    HypothesisViolated,
    NonCommutingUnsupported,
    NotPSD,
    OflmError,
    QuadratureNotConverged,
    RadialQuadratureDiverged,
    SchemaError,
    UnlinkedParams,
    ValidationError,
    WindowTooSmall,
)

SUBCOMMANDS = ("validate", "simulate", "cov", "timerev", "limits", "parseval")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_HYPOTHESIS = 4

_CONFIG_ERRORS = (SchemaError, ValidationError)
_HYPOTHESIS_ERRORS = (HypothesisViolated,)
_NUMERICAL_ERRORS = (QuadratureNotConverged, GridTooCoarse, NotPSD, WindowTooSmall,
                     RadialQuadratureDiverged, FourthMomentDiverged,
                     NonCommutingUnsupported, UnlinkedParams)


def classify_error(exc: Exception) -> int:
    if isinstance(exc, _CONFIG_ERRORS):
        return EXIT_CONFIG
    if isinstance(exc, _HYPOTHESIS_ERRORS):
        return EXIT_HYPOTHESIS
    if isinstance(exc, _NUMERICAL_ERRORS + (OflmError,)):
        return EXIT_NUMERICAL
    raise exc


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else _fmt(v) for v in row) + "\n")


class ArtifactSink:
    """Collects artifacts in out_dir (or discards payloads when out_dir is
    None, still tracking names for the manifest)."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir) if out_dir else None
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)
        self.names = []

    def csv(self, name, header, rows):
        self.names.append(name)
        if self.dir:
            _write_csv(self.dir / name, header, rows)

    def json(self, name, payload):
        self.names.append(name)
        if self.dir:
            (self.dir / name).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _build_simulator(cfg: ExperimentConfig, threads: int):
    window = None if cfg.window is None else simulate.Window(*cfg.window)
    opts = dict(small_jump_eps=cfg.small_jump_eps, gaussian_tail=cfg.gaussian_tail,
                gaussian_small_jumps=cfg.gaussian_small_jumps, config_digest=cfg.digest)
    if cfg.kind == "maofLm":
        return simulate.MaofLmSimulator(cfg.time_params, cfg.measure, cfg.times,
                                        window, **opts)
    if cfg.kind == "rhofLm":
        return simulate.RhofLmSimulator(cfg.fourier_params, cfg.measure, cfg.times,
                                        window, **opts)
    raise ValidationError("ofbm is simulated via its joint covariance; use kind"
                          " maofLm/rhofLm for Poisson-field simulation or the"
                          " 'gaussian' flag in experiment", "/process/kind")


def _joint_gram(cfg: ExperimentConfig, tol: float) -> np.ndarray:
    p, times = cfg.p, cfg.times
    G = np.zeros((len(times) * p, len(times) * p))
    for i, s in enumerate(times):
        for j in range(i, len(times)):
            t = times[j]
            if cfg.kind == "rhofLm":
                block = covariance.cov_rhofLm(float(s), float(t), cfg.fourier_params,
                                              cfg.measure, tol=tol)
            else:
                block = covariance.cov_maofLm(float(s), float(t), cfg.time_params,
                                              cfg.measure, tol=tol)
            G[i * p:(i + 1) * p, j * p:(j + 1) * p] = block
            G[j * p:(j + 1) * p, i * p:(i + 1) * p] = block.T
    return G


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def run_validate(cfg: ExperimentConfig, seed, sink: ArtifactSink, threads, tol_profile):
    report = cfg.hurst.report
    m2 = levy.second_moment(cfg.measure.base if cfg.kind == "rhofLm" else cfg.measure)
    payload = {
        "kind": cfg.kind, "p": cfg.p,
        "regime": report.regime,
        "eigenvalues": [[float(np.real(l)), float(np.imag(l))] for l in report.eigenvalues],
        "eigenvector_condition": report.condition_number,
        "second_moment_trace": float(np.trace(m2)),
        "times": [float(t) for t in cfg.times],
    }
    sink.json("validation.json", payload)
    return payload


def run_simulate(cfg: ExperimentConfig, seed, sink: ArtifactSink, threads, tol_profile):
    if cfg.kind == "ofbm" or cfg.experiment.get("gaussian"):
        gram = _joint_gram(cfg, 1e-10 if tol_profile == "default" else 1e-12)
        ens = simulate.gaussian_ensemble(gram, cfg.times, seed, cfg.replications,
                                         config_digest=cfg.digest)
        window_note = None
    else:
        sim = _build_simulator(cfg, threads)
        ens = simulate.generate_ensemble(sim, seed, cfg.replications, threads=threads)
        window_note = {"lo": sim.window.lo, "hi": sim.window.hi,
                       "tail_std_fraction": sim.window.tail_std_fraction}
    rows = []
    for r in range(ens.replications):
        for k, t in enumerate(ens.grid):
            rows.append((float(r), float(t), *[float(v) for v in ens.values[r, k]]))
    header = ["replication", "t"] + [f"X{i + 1}" for i in range(ens.p)]
    sink.csv("ensemble.csv", header, rows)
    mean, se = mcstats.ensemble_mean(ens)
    payload = {"replications": ens.replications,
               "grid": [float(t) for t in ens.grid],
               "mean": mean.tolist(), "mean_se": se.tolist(),
               "window": window_note}
    sink.json("simulate_summary.json", payload)
    return payload


def run_cov(cfg: ExperimentConfig, seed, sink: ArtifactSink, threads, tol_profile):
    tol = cfg.quad_tol if tol_profile == "default" else min(cfg.quad_tol, 1e-12)
    pairs = cfg.experiment.get("pairs")
    if pairs is None:
        pairs = [[float(s), float(t)] for i, s in enumerate(cfg.times)
                 for t in cfg.times[i:]]
    rows, values = [], {}
    for s, t in pairs:
        if cfg.kind == "rhofLm":
            C = covariance.cov_rhofLm(float(s), float(t), cfg.fourier_params,
                                      cfg.measure, tol=tol)
        else:
            C = covariance.cov_maofLm(float(s), float(t), cfg.time_params,
                                      cfg.measure, tol=tol)
        values[f"{s},{t}"] = C.tolist()
        for i in range(cfg.p):
            for j in range(cfg.p):
                rows.append((float(s), float(t), float(i), float(j), C[i, j]))
    sink.csv("cov.csv", ["s", "t", "i", "j", "value"], rows)

    scaling = {}
    factors = cfg.experiment.get("scaling_factors", [])
    if factors and cfg.kind != "rhofLm":
        H = cfg.hurst.H
        worst = 0.0
        srows = []
        for c in factors:
            for s, t in pairs:
                base = np.array(values[f"{s},{t}"])
                lhs = covariance.cov_maofLm(float(c * s), float(c * t),
                                            cfg.time_params, cfg.measure, tol=tol)
                cH = matfun.matrix_power(H, float(c))
                res = float(np.max(np.abs(lhs - cH @ base @ cH.T)))
                worst = max(worst, res)
                srows.append((float(c), float(s), float(t), res))
        sink.csv("cov_scaling_residuals.csv", ["c", "s", "t", "residual"], srows)
        scaling = {"factors": list(map(float, factors)), "max_residual": worst}
    payload = {"pairs": pairs, "cov": values, "scaling": scaling}
    sink.json("cov_summary.json", payload)
    return payload


def run_timerev(cfg: ExperimentConfig, seed, sink: ArtifactSink, threads, tol_profile):
    tol = cfg.reversibility_tol
    if cfg.kind == "rhofLm":
        verdict = timerev.check_rhofLm(cfg.fourier_params.A, cfg.measure, tol=tol)
        _, gauss_res = timerev.check_ofbm_fourier(cfg.fourier_params.A, tol=tol)
        payload = verdict.to_dict()
        payload["gaussian_condition_residual"] = gauss_res
    else:
        Mp, Mm = cfg.time_params.M_plus, cfg.time_params.M_minus
        verdict = timerev.check_maofLm(Mp, Mm, cfg.measure, tol=tol)
        payload = verdict.to_dict()
        _, gauss_res = timerev.check_ofbm_time(Mp, Mm, cfg.hurst.D, tol=tol)
        payload["gaussian_condition_residual"] = gauss_res
        m2 = levy.second_moment(cfg.measure)
        if np.min(np.linalg.eigvalsh(0.5 * (m2 + m2.T))) > 1e-12:
            _, diags = timerev.symmetric_orthogonal_factor(Mp, Mm, m2)
            payload["symmetric_orthogonal_diagnostics"] = diags
    sink.json("timerev.json", payload)
    return payload


def run_limits(cfg: ExperimentConfig, seed, sink: ArtifactSink, threads, tol_profile):
    exp = cfg.experiment
    mode = exp.get("mode", "kurtosis_scaling")
    rows_out = []
    if mode == "kurtosis_scaling":
        if cfg.p != 1 or cfg.kind != "maofLm":
            raise ValidationError("kurtosis_scaling mode needs a scalar maofLm config",
                                  "/experiment/mode")
        t = float(exp.get("t", 1.0))
        c_list = [float(c) for c in exp.get("c_list", [1.0, 4.0, 16.0])]
        reps = int(exp.get("replications", cfg.replications))
        rows = limits.kurtosis_scaling(cfg.time_params, cfg.measure, t, c_list,
                                       seed, reps, threads=threads)
        for r in rows:
            rows_out.append((r.c, "excess_kurtosis_predicted", r.predicted, 0.0))
            rows_out.append((r.c, "excess_kurtosis_estimated", r.estimated, r.se))
        payload = {"mode": mode, "t": t,
                   "rows": [{"c": r.c, "predicted": r.predicted,
                             "estimated": r.estimated, "se": r.se} for r in rows]}
    elif mode == "gaussian_distance":
        kind = exp.get("kind", "ma_large" if cfg.kind == "maofLm" else "rh_small")
        factors = [float(c) for c in exp.get("factors", [1.0, 4.0, 16.0, 64.0])]
        reps = int(exp.get("replications", cfg.replications))
        target = _joint_gram(cfg, 1e-8)
        u_mag = [float(x) for x in exp.get("u_magnitudes", [0.5, 1.0])]
        us = np.array([[m * np.ones(cfg.p) / np.sqrt(cfg.p) for _ in cfg.times]
                       for m in u_mag])
        payload_rows = []
        for c in factors:
            ens = limits.rescaled_ensemble(
                kind, c, times=cfg.times, master_seed=seed, replications=reps,
                time_params=cfg.time_params, mu=cfg.measure if cfg.kind == "maofLm" else None,
                fourier_params=cfg.fourier_params,
                view=cfg.measure if cfg.kind == "rhofLm" else None, threads=threads)
            rep = limits.gaussian_limit_distance(ens, cfg.times, target, us)
            rows_out.append((c, "cov_max_se_units", rep.cov_max_se_units, 0.0))
            rows_out.append((c, "chf_discrepancy", rep.chf_max_discrepancy, rep.chf_ci / 3.0))
            for k, (kv, kse) in enumerate(rep.kurtosis):
                rows_out.append((c, f"excess_kurtosis_{k + 1}", kv, kse))
            payload_rows.append({"factor": c, "cov_max_se_units": rep.cov_max_se_units,
                                 "chf_discrepancy": rep.chf_max_discrepancy,
                                 "chf_ci": rep.chf_ci,
                                 "kurtosis": [list(map(float, x)) for x in rep.kurtosis]})
        payload = {"mode": mode, "kind": kind, "rows": payload_rows}
    else:
        raise ValidationError(f"unknown limits mode {mode!r}", "/experiment/mode")
    sink.csv("limits.csv", ["scale", "metric", "value", "se"], rows_out)
    sink.json("limits_summary.json", payload)
    return payload


def _default_fourier_view(p: int) -> levy.ComplexLevyView:
    atoms = np.hstack([np.eye(p), np.eye(p)])
    view = levy.ComplexLevyView(levy.DiscreteMeasure(atoms, np.ones(p)))
    return levy.normalize_complex_measure(view)


def run_parseval(cfg: ExperimentConfig, seed, sink: ArtifactSink, threads, tol_profile):
    if cfg.kind != "maofLm":
        raise ValidationError("parseval runs on a maofLm configuration", "/process/kind")
    tol = cfg.quad_tol if tol_profile == "default" else min(cfg.quad_tol, 1e-12)
    mu = cfg.measure
    m2 = levy.second_moment(mu)
    if np.max(np.abs(m2 - np.eye(cfg.p))) > 1e-8:
        mu = levy.normalize_time_measure(mu)
    fpar = covariance.linked_fourier_params(cfg.time_params)
    view = _default_fourier_view(cfg.p)
    pairs = cfg.experiment.get("pairs", [[1.0, 2.0]])
    rows, worst = [], 0.0
    for s, t in pairs:
        res = covariance.parseval_residual(float(s), float(t), cfg.time_params, fpar,
                                           mu, view, tol=tol)
        worst = max(worst, res)
        rows.append((float(s), float(t), res))
    sink.csv("parseval.csv", ["s", "t", "residual"], rows)
    payload = {"pairs": pairs, "max_residual": worst}
    sink.json("parseval_summary.json", payload)
    return payload


_RUNNERS = {"validate": run_validate, "simulate": run_simulate, "cov": run_cov,
            "timerev": run_timerev, "limits": run_limits, "parseval": run_parseval}


def run(subcommand: str, config, seed: int = 0, out_dir=None, threads: int = 1,
        tolerance_profile: str = "default"):
    """Execute one subcommand; returns (results, manifest).  Raises package
    errors for the caller to map onto exit codes (see classify_error)."""
    if subcommand not in _RUNNERS:
        raise ValidationError(f"unknown subcommand {subcommand!r}")
    if tolerance_profile not in ("default", "strict"):
        raise ValidationError(f"unknown tolerance profile {tolerance_profile!r}")
    cfg = config if isinstance(config, ExperimentConfig) else parse_config(config)
    sink = ArtifactSink(out_dir)
    t0 = time.perf_counter()
    results = _RUNNERS[subcommand](cfg, int(seed), sink, int(threads), tolerance_profile)
    manifest = {
        "subcommand": subcommand,
        "config_digest": cfg.digest,
        "seed": int(seed),
        "threads": int(threads),
        "tolerance_profile": tolerance_profile,
        "versions": {"oflm": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": time.perf_counter() - t0,
        "artifacts": sink.names,
    }
    if sink.dir:
        (sink.dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return results, manifest
