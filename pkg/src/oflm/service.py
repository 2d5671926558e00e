"""HTTP front end: one endpoint per batch subcommand, wrapping the runner.

Error mapping: configuration problems return 422, violated experiment
hypotheses 409, numerical failures 500; each carries a structured detail
{kind, message, pointer} that clients translate back to exit codes.
"""

from __future__ import annotations

from typing import Any, Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, runner
from .errors import OflmError

app = FastAPI(title="oflm lab", version=__version__,
              description="Simulation and numerical verification of operator"
                          " fractional Levy motion")


class RunRequest(BaseModel):
    config: dict
    seed: int = 0
    out_dir: Optional[str] = None
    threads: int = Field(default=1, ge=1, le=256)
    tolerance_profile: str = "default"


class RunResponse(BaseModel):
    status: str
    subcommand: str
    results: Any
    manifest: dict


class HealthResponse(BaseModel):
    status: str
    version: str


_STATUS_BY_EXIT = {runner.EXIT_CONFIG: 422, runner.EXIT_HYPOTHESIS: 409,
                   runner.EXIT_NUMERICAL: 500}


def _execute(subcommand: str, req: RunRequest) -> RunResponse:
    try:
        results, manifest = runner.run(subcommand, req.config, seed=req.seed,
                                       out_dir=req.out_dir, threads=req.threads,
                                       tolerance_profile=req.tolerance_profile)
    except OflmError as exc:
        exit_code = runner.classify_error(exc)
        detail = {"kind": {runner.EXIT_CONFIG: "config_error",
                           runner.EXIT_HYPOTHESIS: "hypothesis_violation",
                           runner.EXIT_NUMERICAL: "numerical_failure"}[exit_code],
                  "message": str(exc),
                  "pointer": getattr(exc, "pointer", ""),
                  "exit_code": exit_code}
        raise HTTPException(status_code=_STATUS_BY_EXIT[exit_code], detail=detail)
    return RunResponse(status="ok", subcommand=subcommand, results=results,
                       manifest=manifest)


@app.get("/healthz", response_model=HealthResponse)
def healthz():
    return HealthResponse(status="ok", version=__version__)


@app.post("/validate", response_model=RunResponse)
def validate(req: RunRequest):
    return _execute("validate", req)


@app.post("/simulate", response_model=RunResponse)
def simulate(req: RunRequest):
    return _execute("simulate", req)


@app.post("/cov", response_model=RunResponse)
def cov(req: RunRequest):
    return _execute("cov", req)


@app.post("/timerev", response_model=RunResponse)
def timerev(req: RunRequest):
    return _execute("timerev", req)


@app.post("/limits", response_model=RunResponse)
def limits(req: RunRequest):
    return _execute("limits", req)


@app.post("/parseval", response_model=RunResponse)
def parseval(req: RunRequest):
    return _execute("parseval", req)
