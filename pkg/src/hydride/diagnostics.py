"""Machine checks of the provable discrete structure.

Every quantity the discrete analysis bounds uniformly in the time step is
logged per step: the phase energy (distance to the neutral phase value
plus accumulated phase-gradient dissipation), the density entropy
integral(u - log u), the accumulated kinetic phase term plus the graph
potential, the internal-energy ledger with its accumulated
temperature-gradient term, and the weighted pressure energy.  The
per-step mass-balance identity (the discrete pressure equation tested
with the constant function) and the sign of every dissipation addend are
checked alongside.

Boundedness of these ledgers across nested time refinements is the
numerical shadow of the uniform-in-tau estimates; the refinement studies
below measure exactly that, plus the Cauchy decrease of the trajectories
themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import (Grid, boundary_integrate, cellwise_grad_sq, h1_seminorm_sq,
                   integrate, norm_l2)
from .model import dissipation_potential
from .stepper import RunConfig, State, StepStats, run

__all__ = [
    "LEDGER_COLUMNS",
    "LedgerRow",
    "DiagnosticsLedger",
    "recompute_ledger",
    "UniformityReport",
    "check_uniform_in_tau",
    "CauchyStudy",
    "tau_cauchy_study",
    "PositivityReport",
    "positivity_report",
]

LEDGER_COLUMNS = (
    "step", "time", "phase_bounds_ok", "min_p", "min_u", "min_theta",
    "mass_balance_residual", "chi_energy", "u_entropy", "kinetic_chi",
    "e_energy", "p_energy", "dissipation_min",
    "newton_iters", "cg_iters", "sweep_iters",
)


@dataclass(frozen=True)
class LedgerRow:
    step: int
    time: float
    phase_bounds_ok: bool
    min_p: float
    min_u: float
    min_theta: float
    mass_balance_residual: float
    chi_energy: float
    u_entropy: float
    kinetic_chi: float
    e_energy: float
    p_energy: float
    dissipation_min: float
    newton_iters: int
    cg_iters: int
    sweep_iters: int

    def astuple(self):
        return tuple(getattr(self, c) for c in LEDGER_COLUMNS)


class DiagnosticsLedger:
    """Per-step invariant and energy record; append-only."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.rows: list[LedgerRow] = []
        self._acc_grad_chi = 0.0   # sum of tau * |grad chi|^2 integrals
        self._acc_rate = 0.0       # sum of tau * ||rate||^2
        self._acc_grad_theta = 0.0  # sum of (c_s/2) tau * |grad theta|^2

    def record_step(self, prev: State, cur: State,
                    stats: StepStats | None = None) -> LedgerRow:
        cfg = self.cfg
        g = cfg.grid
        tau = cfg.tau
        graph = cfg.graph
        params = cfg.params
        stats = stats or StepStats(0, 0, 0)

        rate = (cur.chi - prev.chi) / tau
        self._acc_grad_chi += tau * h1_seminorm_sq(g, cur.chi)
        self._acc_rate += tau * norm_l2(g, rate) ** 2
        self._acc_grad_theta += (0.5 * cfg.certificate.c_s
                                 * tau * h1_seminorm_sq(g, cur.theta))

        dev = cur.chi - graph.chi_star
        chi_energy = (0.5 * norm_l2(g, dev) ** 2
                      + 0.5 * self._acc_grad_chi
                      + 0.5 * params.nu * h1_seminorm_sq(g, cur.chi))
        u_entropy = integrate(g, cur.u - np.log(cur.u))
        kinetic_chi = self._acc_rate + integrate(g, graph.potential(cur.chi))
        e_energy = 0.5 * norm_l2(g, cur.e) ** 2 + self._acc_grad_theta
        p_energy = integrate(g, cur.p**2 / (1.0 + cur.chi))

        mass = (integrate(g, (cur.u - prev.u) / tau)
                + params.gamma * boundary_integrate(g, cur.p))
        mass_residual = abs(mass) / abs(integrate(g, prev.u))

        min_theta = float(cur.theta.min())
        if min_theta > 0.0:
            phi = dissipation_potential(rate, cellwise_grad_sq(g, rate),
                                        cellwise_grad_sq(g, cur.theta),
                                        cur.theta, params)
            dissipation_min = float(np.min(phi))
        else:
            dissipation_min = math.nan

        row = LedgerRow(
            step=cur.index, time=cur.time,
            phase_bounds_ok=bool(np.all(cur.chi >= graph.lo)
                                 and np.all(cur.chi <= graph.hi)),
            min_p=float(cur.p.min()), min_u=float(cur.u.min()),
            min_theta=min_theta,
            mass_balance_residual=float(mass_residual),
            chi_energy=float(chi_energy), u_entropy=float(u_entropy),
            kinetic_chi=float(kinetic_chi), e_energy=float(e_energy),
            p_energy=float(p_energy), dissipation_min=dissipation_min,
            newton_iters=stats.newton_iters, cg_iters=stats.cg_iters,
            sweep_iters=stats.sweep_iters)
        self.rows.append(row)
        return row

    def supremum(self, column: str) -> float:
        return max(getattr(r, column) for r in self.rows)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(",".join(LEDGER_COLUMNS) + "\n")
            for r in self.rows:
                f.write(",".join(str(x) for x in r.astuple()) + "\n")


def recompute_ledger(cfg: RunConfig, states: list[State]) -> DiagnosticsLedger:
    """Re-derive every ledger row from stored consecutive snapshots.

    Requires the snapshot cadence to have been 1; solver statistics are
    not recoverable from fields and stay zero."""
    ledger = DiagnosticsLedger(cfg)
    for prev, cur in zip(states[:-1], states[1:]):
        if cur.index != prev.index + 1:
            raise ValueError("recompute needs consecutive snapshots")
        ledger.record_step(prev, cur)
    return ledger


# --- uniform-in-tau check ----------------------------------------------------

ENERGY_COLUMNS = ("chi_energy", "u_entropy", "kinetic_chi", "e_energy",
                  "p_energy")


@dataclass(frozen=True)
class UniformityReport:
    factor: float
    suprema: dict
    ratios: dict
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_text(self) -> str:
        lines = [f"uniform-in-tau ledger check (allowed factor {self.factor})"]
        for col in ENERGY_COLUMNS:
            mark = "VIOLATION" if col in self.violations else "ok"
            sups = ", ".join(f"{s:.6g}" for s in self.suprema[col])
            lines.append(f"  {col:14s} sup per run: [{sups}] "
                         f"ratio {self.ratios[col]:.4g}  {mark}")
        return "\n".join(lines)


def check_uniform_in_tau(ledgers: list[DiagnosticsLedger],
                         factor: float = 2.0,
                         atol: float = 1e-10) -> UniformityReport:
    """Compare ledger suprema across a nested refinement family.

    Each energy supremum must vary by less than ``factor`` across the
    runs; a failure is reported, not raised, since it flags a suspect
    regime rather than a broken step."""
    suprema = {}
    ratios = {}
    violations = []
    for col in ENERGY_COLUMNS:
        sups = [led.supremum(col) for led in ledgers]
        lo, hi = min(sups), max(sups)
        ratio = hi / lo if lo > atol else 1.0 if hi <= atol else math.inf
        suprema[col] = tuple(sups)
        ratios[col] = ratio
        if ratio >= factor:
            violations.append(col)
    return UniformityReport(factor=factor, suprema=suprema, ratios=ratios,
                            violations=tuple(violations))


# --- tau-Cauchy refinement study ---------------------------------------------


@dataclass(frozen=True)
class CauchyStudy:
    n_list: tuple[int, ...]
    # diffs[var] = tuple of L2(Q) differences between consecutive refinements
    diffs: dict

    def decreasing(self, var: str) -> bool:
        d = self.diffs[var]
        return all(b < a for a, b in zip(d[:-1], d[1:]))

    def to_text(self) -> str:
        pairs = [f"N={a}->N={b}" for a, b in zip(self.n_list[:-1],
                                                 self.n_list[1:])]
        lines = ["tau-Cauchy study: L2(Q) difference between refinements"]
        lines.append("  variable  " + "  ".join(f"{p:>14s}" for p in pairs))
        for var, d in self.diffs.items():
            lines.append(f"  {var:8s}  "
                         + "  ".join(f"{x:14.6e}" for x in d))
        return "\n".join(lines)


def _l2q_difference(coarse_states, fine_states, ratio: int, tau_coarse: float,
                    grid: Grid, var: str) -> float:
    total = 0.0
    for i in range(1, len(coarse_states)):
        a = getattr(coarse_states[i], var)
        b = getattr(fine_states[i * ratio], var)
        total += tau_coarse * norm_l2(grid, a - b) ** 2
    return math.sqrt(total)


def tau_cauchy_study(cfg: RunConfig, theta0, chi0, p0,
                     n_list: list[int]) -> CauchyStudy:
    """Run the same problem at nested step counts and measure the L2(Q)
    distance between successive refinements, read piecewise-constantly in
    time at the coarser run's time points."""
    n_list = sorted(int(n) for n in n_list)
    for a, b in zip(n_list[:-1], n_list[1:]):
        if b % a != 0:
            raise ValueError("n_list must be nested (each divides the next)")
    results = []
    for n in n_list:
        sub = replace(cfg, n_steps=n, snapshot_every=1)
        results.append(run(theta0, chi0, p0, sub))
    diffs = {var: [] for var in ("theta", "chi", "p")}
    for k in range(len(n_list) - 1):
        nc, nf = n_list[k], n_list[k + 1]
        ratio = nf // nc
        tau_c = cfg.t_final / nc
        for var in diffs:
            diffs[var].append(_l2q_difference(results[k].states,
                                              results[k + 1].states,
                                              ratio, tau_c, cfg.grid, var))
    return CauchyStudy(n_list=tuple(n_list),
                       diffs={k: tuple(v) for k, v in diffs.items()})


# --- temperature positivity --------------------------------------------------


@dataclass(frozen=True)
class PositivityReport:
    min_theta: float
    min_p: float
    min_u: float
    log_theta_l1: tuple  # (step, time, integral of |log theta|) per snapshot
    flagged: tuple       # (step, count of nonpositive-theta cells)

    @property
    def positive(self) -> bool:
        return self.min_theta > 0.0

    def to_text(self) -> str:
        lines = [f"temperature positivity: min theta = {self.min_theta:.6e} "
                 f"({'POSITIVE' if self.positive else 'VIOLATED'})",
                 f"min p = {self.min_p:.6e}, min u = {self.min_u:.6e}"]
        for step, count in self.flagged:
            lines.append(f"  step {step}: {count} nonpositive cells")
        return "\n".join(lines)


def positivity_report(states: list[State], grid: Grid) -> PositivityReport:
    min_theta = min(float(s.theta.min()) for s in states)
    min_p = min(float(s.p.min()) for s in states)
    min_u = min(float(s.u.min()) for s in states)
    series = []
    flagged = []
    for s in states:
        pos = s.theta > 0.0
        bad = int(np.count_nonzero(~pos))
        if bad:
            flagged.append((s.index, bad))
            val = math.nan
        else:
            val = integrate(grid, np.abs(np.log(s.theta)))
        series.append((s.index, s.time, val))
    return PositivityReport(min_theta=min_theta, min_p=min_p, min_u=min_u,
                            log_theta_l1=tuple(series), flagged=tuple(flagged))
