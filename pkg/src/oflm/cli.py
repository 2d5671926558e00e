"""Thin command-line client for the batch service.

By default requests run against an in-process application instance (no
network, same filesystem); --server routes them to a remote deployment
instead.  Exit codes: 0 ok, 2 configuration error, 3 numerical failure,
4 hypothesis violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__, runner

_CSV_COLUMNS = {
    "simulate": "ensemble.csv: replication,t,X1..Xp (one row per grid time per path)",
    "cov": "cov.csv: s,t,i,j,value; cov_scaling_residuals.csv: c,s,t,residual",
    "limits": "limits.csv: scale,metric,value,se",
    "parseval": "parseval.csv: s,t,residual",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oflm",
        description="Simulate and numerically verify operator fractional Levy"
                    " motion (moving-average and harmonizable variants).",
        epilog="CSV layouts per subcommand: "
               + "; ".join(f"{k}: {v}" for k, v in _CSV_COLUMNS.items()))
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, desc in (
            ("validate", "check a configuration and report the Hurst spectrum"),
            ("simulate", "generate a seeded ensemble of sample paths"),
            ("cov", "deterministic covariance matrices (plus scaling residuals)"),
            ("timerev", "parametric time-reversibility verdict"),
            ("limits", "scaling-limit experiments (kurtosis law, Gaussian distance)"),
            ("parseval", "time vs Fourier covariance duality residual")):
        p = sub.add_parser(name, help=desc, description=desc)
        p.add_argument("--config", required=True, metavar="PATH",
                       help="JSON experiment configuration")
        p.add_argument("--seed", type=int, default=0, metavar="U64",
                       help="master seed (replication r uses stream (seed, r))")
        p.add_argument("--out", default=None, metavar="DIR",
                       help="directory for CSV/JSON artifacts and the manifest")
        p.add_argument("--threads", type=int,
                       default=int(os.environ.get("OFLM_LAB_THREADS", "1")),
                       metavar="N", help="worker cap (env fallback OFLM_LAB_THREADS)")
        p.add_argument("--tolerance-profile", choices=("default", "strict"),
                       default="default")
        p.add_argument("--server", default=None, metavar="URL",
                       help="send the request to a running service instead of"
                            " executing in-process")
    return parser


def _request_payload(args) -> dict | None:
    path = Path(args.config)
    if not path.exists():
        print(f"error: config file {path} does not exist", file=sys.stderr)
        return None
    config = json.loads(path.read_text())
    return {"config": config, "seed": args.seed, "out_dir": args.out,
            "threads": args.threads, "tolerance_profile": args.tolerance_profile}


def _post(args, payload: dict):
    """POST to the chosen transport; returns (status_code, body dict)."""
    if args.server:
        import httpx
        resp = httpx.post(f"{args.server.rstrip('/')}/{args.subcommand}",
                          json=payload, timeout=None)
        return resp.status_code, resp.json()
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DeprecationWarning)
        from fastapi.testclient import TestClient
    from .service import app
    with TestClient(app, raise_server_exceptions=False) as client:
        resp = client.post(f"/{args.subcommand}", json=payload)
        return resp.status_code, resp.json()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    payload = _request_payload(args)
    if payload is None:
        return runner.EXIT_CONFIG
    status, body = _post(args, payload)
    if status == 200:
        print(json.dumps(body, indent=2, sort_keys=True))
        return runner.EXIT_OK
    detail = body.get("detail", body)
    print(json.dumps(detail, indent=2, sort_keys=True), file=sys.stderr)
    if isinstance(detail, dict) and "exit_code" in detail:
        return int(detail["exit_code"])
    return runner.EXIT_CONFIG if status == 422 else runner.EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
