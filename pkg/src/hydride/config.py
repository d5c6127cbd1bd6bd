"""Configuration ingestion: sectioned UTF-8 key=value files.

Every key corresponds to one model constant or one documented solver or
output knob; unknown sections or keys are hard errors.  The plateau curve
is certified here, at parse time, so an inadmissible parameter set aborts
before any solve starts.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, replace

from .errors import AdmissibilityError, DomainError, ParseError
from .grid import Grid
from .model import ModelParams, MonotoneGraph, build_plateau_curve, certify_curve
from .profiles import Profile, evaluate_profile, format_profile, parse_profile
from .solvers import InclusionSolveConfig, LinearSolveConfig
from .stepper import RunConfig

__all__ = ["CliConfig", "parse_config", "emit_config", "initial_fields",
           "DEFAULT_CONFIG"]

# section -> key -> (converter, default-as-string)
_SCHEMA = {
    "model": {
        "a": (float, "1.0"), "b": (float, "1.0"), "c_p": (float, "1.0"),
        "lambda_diff": (float, "1.0"), "k0": (float, "1.0"),
        "delta": (float, "1.0"), "mu": (float, "1.0"), "nu": (float, "0.0"),
        "gamma": (float, "1.0"),
        "c1": (float, "0.25"), "c2": (float, "1.0"),
        "theta_star": (float, "1.0"), "theta_star_star": (float, "0.5"),
        "lambda_beta": (float, "1.0"),
        "cert_samples": (int, "10000"),
    },
    "grid": {
        "cells": (str, "16"),
        "lengths": (str, ""),
    },
    "time": {
        "t_final": (float, "1.0"),
        "n_steps": (int, "16"),
    },
    "solvers": {
        "strategy": (str, "projected_sweep"),
        "cg_tol_rel": (float, "1e-12"), "cg_tol_abs": (float, "1e-14"),
        "cg_max_iter": (int, "50000"),
        "sweep_tol": (float, "1e-11"), "max_outer": (int, "20000"),
        "membership_tol": (float, "1e-6"),
        "yosida_lambda_start": (float, "0.01"),
        "yosida_lambda_min": (float, "1e-8"),
        "newton_tol": (float, "1e-10"),
        "psi_tol": (float, "1e-9"),
    },
    "initial_data": {
        "theta0": (str, "constant value=1.0"),
        "chi0": (str, "constant value=0.5"),
        "p0": (str, "constant value=1.0"),
        "chi0_flux_tol": (float, "0.1"),
    },
    "output": {
        "snapshot_every": (int, "1"),
    },
}

DEFAULT_CONFIG = "\n".join(
    [line for section, keys in _SCHEMA.items()
     for line in ([f"[{section}]"]
                  + [f"{k} = {default}" for k, (_, default) in keys.items()]
                  + [""])])


@dataclass(frozen=True)
class CliConfig:
    run: RunConfig
    theta0: Profile
    chi0: Profile
    p0: Profile


def _read_values(text: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParseError(f"malformed config: {exc}") from exc
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ParseError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ParseError(f"unknown key {key!r} in section [{section}]")
    values = {}
    for section, keys in _SCHEMA.items():
        for key, (conv, default) in keys.items():
            raw = default
            if parser.has_option(section, key):
                raw = parser.get(section, key)
            try:
                values[(section, key)] = conv(raw)
            except ValueError as exc:
                raise ParseError(
                    f"key {key!r} in [{section}]: cannot parse {raw!r}") from exc
    return values


def _int_list(raw: str, what: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ParseError(f"cannot parse {what}: {raw!r}") from exc


def _float_list(raw: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise ParseError(f"cannot parse {what}: {raw!r}") from exc


def parse_config(source: str) -> CliConfig:
    """Build a fully validated run configuration from a path or from
    config text; the curve certificate is computed here and an
    admissibility failure aborts the parse."""
    if "\n" not in source and "=" not in source and os.path.exists(source):
        with open(source, "r", encoding="utf-8") as f:
            text = f.read()
    else:
        text = source
    v = _read_values(text)

    cells = _int_list(v[("grid", "cells")], "grid cells")
    lengths_raw = v[("grid", "lengths")]
    lengths = _float_list(lengths_raw, "grid lengths") if lengths_raw else None
    if lengths is not None and len(lengths) != len(cells):
        raise ParseError("grid lengths must match the number of axes")
    try:
        grid = Grid.box(cells, lengths)
        params = ModelParams(
            a=v[("model", "a")], b=v[("model", "b")], c_p=v[("model", "c_p")],
            lambda_diff=v[("model", "lambda_diff")], k0=v[("model", "k0")],
            delta=v[("model", "delta")], mu=v[("model", "mu")],
            nu=v[("model", "nu")], gamma=v[("model", "gamma")])
        curve = build_plateau_curve(
            v[("model", "c1")], v[("model", "c2")],
            v[("model", "theta_star")], v[("model", "theta_star_star")])
        cert = certify_curve(curve, v[("model", "lambda_beta")],
                             v[("model", "cert_samples")])
        curve = replace(curve, certificate=cert)
        graph = MonotoneGraph.interval(v[("model", "lambda_beta")])
        linear = LinearSolveConfig(tol_rel=v[("solvers", "cg_tol_rel")],
                                   tol_abs=v[("solvers", "cg_tol_abs")],
                                   max_iter=v[("solvers", "cg_max_iter")])
        inclusion = InclusionSolveConfig(
            strategy=v[("solvers", "strategy")],
            sweep_tol=v[("solvers", "sweep_tol")],
            yosida_lambda_start=v[("solvers", "yosida_lambda_start")],
            yosida_lambda_min=v[("solvers", "yosida_lambda_min")],
            max_outer=v[("solvers", "max_outer")],
            membership_tol=v[("solvers", "membership_tol")])
        run_cfg = RunConfig(
            grid=grid, params=params, curve=curve, certificate=cert,
            graph=graph,
            n_steps=v[("time", "n_steps")], t_final=v[("time", "t_final")],
            linear=linear, inclusion=inclusion,
            newton_tol=v[("solvers", "newton_tol")],
            psi_tol=v[("solvers", "psi_tol")],
            snapshot_every=v[("output", "snapshot_every")],
            chi0_flux_tol=v[("initial_data", "chi0_flux_tol")])
    except AdmissibilityError:
        raise
    except DomainError as exc:
        raise ParseError(str(exc)) from exc

    return CliConfig(run=run_cfg,
                     theta0=parse_profile(v[("initial_data", "theta0")]),
                     chi0=parse_profile(v[("initial_data", "chi0")]),
                     p0=parse_profile(v[("initial_data", "p0")]))


def emit_config(cfg: CliConfig) -> str:
    """Canonical config text; parse_config(emit_config(c)) == c."""
    r = cfg.run
    lines = []

    def section(name, pairs):
        lines.append(f"[{name}]")
        for k, val in pairs:
            lines.append(f"{k} = {val}")
        lines.append("")

    p = r.params
    section("model", [
        ("a", repr(p.a)), ("b", repr(p.b)), ("c_p", repr(p.c_p)),
        ("lambda_diff", repr(p.lambda_diff)), ("k0", repr(p.k0)),
        ("delta", repr(p.delta)), ("mu", repr(p.mu)), ("nu", repr(p.nu)),
        ("gamma", repr(p.gamma)),
        ("c1", repr(r.curve.c1)), ("c2", repr(r.curve.c2)),
        ("theta_star", repr(r.curve.theta_star)),
        ("theta_star_star", repr(r.curve.theta_star_star)),
        ("lambda_beta", repr(r.graph.lambda_beta)),
        ("cert_samples", str(r.certificate.sample_count)),
    ])
    section("grid", [
        ("cells", ",".join(str(n) for n in r.grid.cells)),
        ("lengths", ",".join(repr(L) for L in r.grid.lengths)),
    ])
    section("time", [
        ("t_final", repr(r.t_final)), ("n_steps", str(r.n_steps)),
    ])
    section("solvers", [
        ("strategy", r.inclusion.strategy),
        ("cg_tol_rel", repr(r.linear.tol_rel)),
        ("cg_tol_abs", repr(r.linear.tol_abs)),
        ("cg_max_iter", str(r.linear.max_iter)),
        ("sweep_tol", repr(r.inclusion.sweep_tol)),
        ("max_outer", str(r.inclusion.max_outer)),
        ("membership_tol", repr(r.inclusion.membership_tol)),
        ("yosida_lambda_start", repr(r.inclusion.yosida_lambda_start)),
        ("yosida_lambda_min", repr(r.inclusion.yosida_lambda_min)),
        ("newton_tol", repr(r.newton_tol)),
        ("psi_tol", repr(r.psi_tol)),
    ])
    section("initial_data", [
        ("theta0", format_profile(cfg.theta0)),
        ("chi0", format_profile(cfg.chi0)),
        ("p0", format_profile(cfg.p0)),
        ("chi0_flux_tol", repr(r.chi0_flux_tol)),
    ])
    section("output", [
        ("snapshot_every", str(r.snapshot_every)),
    ])
    return "\n".join(lines)


def initial_fields(cfg: CliConfig):
    g = cfg.run.grid
    return (evaluate_profile(cfg.theta0, g),
            evaluate_profile(cfg.chi0, g),
            evaluate_profile(cfg.p0, g))
