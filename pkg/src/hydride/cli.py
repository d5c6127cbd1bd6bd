"""Command-line interface: single runs, refinement studies, verification.

Exit codes are the only success/failure channel:
  0  success
  1  configuration error (parse failure or inadmissible parameters)
  2  invariant violation detected at runtime (fatal diagnostic)
  3  solver failure (iteration budgets exhausted)

On a nonzero exit only the run manifest is written.  The manifest always
records the certified curve constants, so every archived run carries its
admissibility proof.

The environment variable HYDRIDE_SEED is reserved for future stochastic
initial conditions; the deterministic core ignores it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import CliConfig, emit_config, initial_fields, parse_config
from .diagnostics import check_uniform_in_tau, positivity_report, tau_cauchy_study
from .errors import (AdmissibilityError, DomainError, FieldError,
                     GraphInconsistency, MaxIterations, NoConvergence,
                     ParseError, PositivityViolation)
from .grid import write_field_text
from .mms import builtin_case, mms_run, spatial_order_study, temporal_order_study
from .stepper import run

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INVARIANT = 2
EXIT_SOLVER = 3

_CONFIG_ERRORS = (ParseError, AdmissibilityError)
_INVARIANT_ERRORS = (PositivityViolation, DomainError, FieldError,
                     GraphInconsistency)
_SOLVER_ERRORS = (NoConvergence, MaxIterations)


def _classify(exc: Exception) -> int:
    if isinstance(exc, _CONFIG_ERRORS):
        return EXIT_CONFIG
    if isinstance(exc, _SOLVER_ERRORS):
        return EXIT_SOLVER
    if isinstance(exc, _INVARIANT_ERRORS):
        return EXIT_INVARIANT
    raise exc


def _write_manifest(outdir: str, payload: dict) -> None:
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "manifest.json"), "w",
              encoding="utf-8") as f:
        json.dump(payload, f, indent=2, default=str)


def _manifest_base(command: str, cfg: CliConfig | None) -> dict:
    payload = {"command": command, "status": "error"}
    if cfg is not None:
        cert = cfg.run.certificate
        payload["config"] = emit_config(cfg)
        payload["certificate"] = {
            "c_h": cert.c_h, "c_h_prime": cert.c_h_prime, "c_s": cert.c_s,
            "lambda_beta": cert.lambda_beta,
            "sample_count": cert.sample_count,
        }
    return payload


def cmd_run(config_source: str, outdir: str) -> int:
    cfg = None
    payload = {"command": "run", "status": "error"}
    try:
        cfg = parse_config(config_source)
        payload = _manifest_base("run", cfg)
        theta0, chi0, p0 = initial_fields(cfg)
        result = run(theta0, chi0, p0, cfg.run)
    except Exception as exc:  # mapped onto exit codes below
        code = _classify(exc)
        payload["error"] = {"type": type(exc).__name__, "message": str(exc)}
        partial = getattr(exc, "partial", None)
        if partial is not None:
            payload["steps_completed"] = len(partial.ledger.rows)
        _write_manifest(outdir, payload)
        print(f"error: {exc}", file=sys.stderr)
        return code

    os.makedirs(outdir, exist_ok=True)
    result.ledger.to_csv(os.path.join(outdir, "ledger.csv"))
    snapshots = []
    for s in result.states:
        for var in ("theta", "chi", "p"):
            name = f"snapshot_{var}_{s.index:05d}.txt"
            write_field_text(os.path.join(outdir, name), cfg.run.grid,
                             getattr(s, var))
            snapshots.append(name)
    report = positivity_report(result.states, cfg.run.grid)
    payload.update({
        "status": "ok",
        "steps_completed": cfg.run.n_steps,
        "pressure_floor": {"applied": result.floored_cells > 0,
                           "cells": result.floored_cells,
                           "floor": cfg.run.tau},
        "positivity": {"min_theta": report.min_theta,
                       "min_p": report.min_p, "min_u": report.min_u,
                       "flagged_steps": list(report.flagged)},
        "artifacts": ["ledger.csv"] + snapshots,
    })
    _write_manifest(outdir, payload)
    print(f"run complete: {cfg.run.n_steps} steps, artifacts in {outdir}")
    return EXIT_OK


def cmd_refine(config_source: str, n_list: list[int], outdir: str) -> int:
    cfg = None
    payload = {"command": "refine", "status": "error"}
    try:
        cfg = parse_config(config_source)
        payload = _manifest_base("refine", cfg)
        payload["n_list"] = n_list
        theta0, chi0, p0 = initial_fields(cfg)
        study = tau_cauchy_study(cfg.run, theta0, chi0, p0, n_list)
        from dataclasses import replace
        ledgers = []
        member_runs = []
        for n in sorted(n_list):
            res = run(theta0, chi0, p0, replace(cfg.run, n_steps=n))
            ledgers.append(res.ledger)
            member_runs.append((n, res))
        uniformity = check_uniform_in_tau(ledgers)
    except Exception as exc:
        code = _classify(exc)
        payload["error"] = {"type": type(exc).__name__, "message": str(exc)}
        _write_manifest(outdir, payload)
        print(f"error: {exc}", file=sys.stderr)
        return code

    os.makedirs(outdir, exist_ok=True)
    # each member run's artifacts live in a distinct subdirectory
    for n, res in member_runs:
        subdir = os.path.join(outdir, f"run_N{n}")
        os.makedirs(subdir, exist_ok=True)
        res.ledger.to_csv(os.path.join(subdir, "ledger.csv"))
    with open(os.path.join(outdir, "cauchy.csv"), "w", encoding="utf-8") as f:
        f.write("variable,n_coarse,n_fine,l2q_difference\n")
        for var, diffs in study.diffs.items():
            for (a, b), d in zip(zip(study.n_list[:-1], study.n_list[1:]),
                                 diffs):
                f.write(f"{var},{a},{b},{d!r}\n")
    with open(os.path.join(outdir, "uniformity.txt"), "w",
              encoding="utf-8") as f:
        f.write(uniformity.to_text() + "\n")
    with open(os.path.join(outdir, "cauchy.txt"), "w", encoding="utf-8") as f:
        f.write(study.to_text() + "\n")
    payload.update({
        "status": "ok",
        "uniformity_ok": uniformity.ok,
        "uniformity_violations": list(uniformity.violations),
        "artifacts": ["cauchy.csv", "cauchy.txt", "uniformity.txt"],
    })
    _write_manifest(outdir, payload)
    print(study.to_text())
    print(uniformity.to_text())
    return EXIT_OK


def cmd_mms(config_source: str, case_name: str, outdir: str) -> int:
    cfg = None
    payload = {"command": "mms", "status": "error", "case": case_name}
    try:
        cfg = parse_config(config_source)
        payload.update(_manifest_base("mms", cfg))
        payload["case"] = case_name
        spatial_factory, temporal_factory = builtin_case(case_name)
        rows = []

        spatial_case = spatial_factory()
        from dataclasses import replace
        from .grid import Grid
        # stationary sanity: time-constant fields reproduce to solver tol
        grid = Grid.box([24] * spatial_case.dim)
        sanity = mms_run(spatial_case, replace(cfg.run, grid=grid, n_steps=4))
        rows.append(("stationary", "theta", grid.cells[0], 4,
                     sanity.errors["theta"], ""))

        cells_list = [16, 32, 64] if spatial_case.dim == 1 else [8, 16, 32]
        errs, orders = spatial_order_study(spatial_case, cfg.run, cells_list)
        for c, e in zip(cells_list, errs):
            rows.append(("spatial", "theta", c, 4, e, ""))
        for (a, b), o in zip(zip(cells_list[:-1], cells_list[1:]), orders):
            rows.append(("spatial-order", "theta", b, 4, "", o))

        temporal_orders = {}
        if temporal_factory is not None:
            temporal_case = temporal_factory()
            n_list = [8, 16, 32]
            terrs, torders = temporal_order_study(temporal_case, cfg.run,
                                                  cells=64, n_list=n_list)
            temporal_orders = torders
            for var, es in terrs.items():
                for n, e in zip(n_list, es):
                    rows.append(("temporal", var, 64, n, e, ""))
                for (a, b), o in zip(zip(n_list[:-1], n_list[1:]),
                                     torders[var]):
                    rows.append(("temporal-order", var, 64, b, "", o))
    except KeyError as exc:
        payload["error"] = {"type": "KeyError", "message": str(exc)}
        _write_manifest(outdir, payload)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        code = _classify(exc)
        payload["error"] = {"type": type(exc).__name__, "message": str(exc)}
        _write_manifest(outdir, payload)
        print(f"error: {exc}", file=sys.stderr)
        return code

    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "mms.csv"), "w", encoding="utf-8") as f:
        f.write("study,variable,cells,n_steps,l2q_error,observed_order\n")
        for row in rows:
            f.write(",".join(str(x) for x in row) + "\n")
    payload.update({
        "status": "ok",
        "spatial_orders": orders,
        "temporal_orders": temporal_orders,
        "artifacts": ["mms.csv"],
    })
    _write_manifest(outdir, payload)
    print(f"mms study complete, spatial orders {orders}; "
          f"artifacts in {outdir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hydride",
        description="Semi-implicit simulator for the three-field "
                    "hydride-storage model with invariant diagnostics.",
        epilog="HYDRIDE_SEED is reserved for future stochastic initial "
               "conditions; the deterministic core ignores it.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single simulation run")
    p_run.add_argument("config")
    p_run.add_argument("--out", default="hydride-out/run")

    p_ref = sub.add_parser("refine", help="tau-refinement study")
    p_ref.add_argument("config")
    p_ref.add_argument("--n", required=True,
                       help="comma-separated nested step counts, e.g. 16,32,64")
    p_ref.add_argument("--out", default="hydride-out/refine")

    p_mms = sub.add_parser("mms", help="manufactured-solution verification")
    p_mms.add_argument("config")
    p_mms.add_argument("--case", default="trig1d")
    p_mms.add_argument("--out", default="hydride-out/mms")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out)
    if args.command == "refine":
        try:
            n_list = [int(tok) for tok in args.n.split(",") if tok.strip()]
        except ValueError:
            print(f"error: cannot parse --n {args.n!r}", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_refine(args.config, n_list, args.out)
    if args.command == "mms":
        return cmd_mms(args.config, args.case, args.out)
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
