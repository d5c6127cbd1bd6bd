"""Time stepping: initial-data preparation and the per-step composition.

One step solves, in this order, the phase inclusion with lagged
temperature and lagged log-pressure, the linear Robin pressure equation
with the fresh phase field, and the strongly monotone temperature
equation with the fresh phase field and lagged temperature data.  The
order matches the induction that makes each solve's data known.

Positivity of pressure and normalized density is asserted after every
step and a loss is fatal: the previous pressure feeds a logarithm at the
next step, and patching the value would mask a violated discrete
estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .errors import DomainError, PositivityViolation
from .grid import Grid, RobinLaplacian, ZeroFluxLaplacian, norm_linf
from .model import (AdmissibilityRecord, InternalEnergyMap, ModelParams,
                    MonotoneGraph, PlateauCurve, internal_energy)
from .solvers import (InclusionSolveConfig, LinearSolveConfig, solve_phase,
                      solve_pressure, solve_temperature)

__all__ = [
    "RunConfig",
    "State",
    "StepStats",
    "Operators",
    "RunResult",
    "make_operators",
    "floor_initial_pressure",
    "init_state",
    "step",
    "run",
]


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs; immutable and comparable."""

    grid: Grid
    params: ModelParams
    curve: PlateauCurve
    certificate: AdmissibilityRecord
    graph: MonotoneGraph
    n_steps: int
    t_final: float
    linear: LinearSolveConfig = field(default_factory=LinearSolveConfig)
    inclusion: InclusionSolveConfig = field(default_factory=InclusionSolveConfig)
    newton_tol: float = 1e-10
    psi_tol: float = 1e-9
    snapshot_every: int = 1
    chi0_flux_tol: float = 0.1

    def __post_init__(self):
        if self.n_steps < 1:
            raise DomainError("n_steps must be >= 1")
        if not self.t_final > 0.0:
            raise DomainError("t_final must be > 0")
        if self.snapshot_every < 1:
            raise DomainError("snapshot_every must be >= 1")

    @property
    def tau(self) -> float:
        return self.t_final / self.n_steps

    @property
    def energy_map(self) -> InternalEnergyMap:
        return InternalEnergyMap(curve=self.curve, record=self.certificate)

    def with_steps(self, n_steps: int) -> "RunConfig":
        return replace(self, n_steps=n_steps)


class Operators(NamedTuple):
    zero_flux: ZeroFluxLaplacian
    robin: RobinLaplacian


def make_operators(cfg: RunConfig) -> Operators:
    return Operators(zero_flux=ZeroFluxLaplacian(cfg.grid),
                     robin=RobinLaplacian(cfg.grid, cfg.params.gamma))


@dataclass
class State:
    """One time level.

    theta  absolute temperature
    chi    phase fraction, inside the graph domain exactly
    p      gas pressure, strictly positive
    e      internal energy, psi(theta, chi)
    u      normalized hydrogen density p / (1 + chi), strictly positive
    xi     constraint reaction recovered from the phase inclusion
    """

    index: int
    time: float
    theta: np.ndarray
    chi: np.ndarray
    p: np.ndarray
    e: np.ndarray
    u: np.ndarray
    xi: np.ndarray


class StepStats(NamedTuple):
    sweep_iters: int
    newton_iters: int
    cg_iters: int


@dataclass
class RunResult:
    states: list[State]
    ledger: "object"
    floored_cells: int


def floor_initial_pressure(p0: np.ndarray, tau: float) -> np.ndarray:
    """Cell-wise max(p0, tau): the initial pressure is floored at the time
    step so its logarithm is finite from the first step on."""
    if not tau > 0.0:
        raise DomainError("tau must be > 0")
    return np.maximum(np.asarray(p0, dtype=float), tau)


def _check_state(s: State, cfg: RunConfig) -> None:
    g = cfg.grid
    for name in ("theta", "chi", "p", "e", "u", "xi"):
        g.check_field(getattr(s, name))
    graph = cfg.graph
    if np.any(s.chi < graph.lo) or np.any(s.chi > graph.hi):
        raise DomainError("phase fraction left the graph domain")
    if not np.all(s.p > 0.0):
        raise PositivityViolation(
            f"pressure lost positivity at step {s.index} (min {s.p.min():.3e})")
    if not np.all(s.u > 0.0):
        raise PositivityViolation(
            f"density lost positivity at step {s.index} (min {s.u.min():.3e})")
    drift = norm_linf(g, s.e - internal_energy(s.theta, s.chi, cfg.curve))
    if drift > cfg.psi_tol:
        raise DomainError(f"internal energy drifted from psi by {drift:.3e}")


def check_zero_flux_compatible(chi0: np.ndarray, grid: Grid, tol: float) -> None:
    """Reject initial phase data with a nonzero normal derivative at the
    boundary faces, estimated to second order from the cell-centered
    layers nearest each face."""
    chi0 = grid.check_field(chi0)
    scale = max(1.0, float(np.abs(chi0).max()))
    for axis in range(grid.dim):
        n = grid.cells[axis]
        if n < 2:
            continue
        h = grid.spacing[axis]

        def layer(i):
            sl = [slice(None)] * grid.dim
            sl[axis] = i
            return chi0[tuple(sl)]

        if n >= 3:
            lo = (3.0 * layer(1) - 2.0 * layer(0) - layer(2)) / h
            hi = (3.0 * layer(n - 2) - 2.0 * layer(n - 1) - layer(n - 3)) / h
        else:
            lo = (layer(1) - layer(0)) / h
            hi = lo
        worst = max(float(np.abs(lo).max()), float(np.abs(hi).max()))
        if worst > tol * scale:
            raise DomainError(
                "initial phase data violates the zero-flux "
                f"compatibility condition on axis {axis} "
                f"(boundary normal derivative {worst:.3e})")


def init_state(theta0: np.ndarray, chi0: np.ndarray, p0: np.ndarray,
               cfg: RunConfig) -> State:
    g = cfg.grid
    theta0 = g.check_field(np.asarray(theta0, dtype=float))
    chi0 = g.check_field(np.asarray(chi0, dtype=float))
    p0 = np.asarray(p0, dtype=float)
    g.check_field(p0)
    graph = cfg.graph
    if np.any(chi0 < graph.lo) or np.any(chi0 > graph.hi):
        raise DomainError("initial phase fraction outside the graph domain")
    if np.any(p0 < 0.0):
        raise DomainError("initial pressure must be >= 0")
    check_zero_flux_compatible(chi0, g, cfg.chi0_flux_tol)
    p = floor_initial_pressure(p0, cfg.tau)
    state = State(index=0, time=0.0,
                  theta=theta0.copy(), chi=chi0.copy(), p=p,
                  e=internal_energy(theta0, chi0, cfg.curve),
                  u=p / (1.0 + chi0),
                  xi=g.new_field(0.0))
    _check_state(state, cfg)
    return state


def phase_rhs(prev: State, cfg: RunConfig, ops: Operators) -> np.ndarray:
    """Known data of the phase update: previous phase carried forward plus
    the lagged driving force h(theta_prev) - log(p_prev)."""
    tau = cfg.tau
    nu = cfg.params.nu
    rhs = prev.chi / tau + cfg.curve.value(prev.theta) - np.log(prev.p)
    if nu > 0.0:
        rhs = rhs + (nu / tau) * ops.zero_flux.apply(prev.chi)
    return rhs


def step(prev: State, cfg: RunConfig, ops: Operators | None = None,
         forcings: dict | None = None) -> tuple[State, StepStats]:
    """Advance one time level; returns the new state and solver statistics.

    ``forcings`` is the verification hook: optional additive sources for
    the ``phase``, ``pressure`` and ``temperature`` equations, used only
    by the manufactured-solution harness.
    """
    if ops is None:
        ops = make_operators(cfg)
    tau = cfg.tau
    forcings = forcings or {}

    rhs = phase_rhs(prev, cfg, ops)
    if "phase" in forcings:
        rhs = rhs + forcings["phase"]
    phase = solve_phase(prev.chi, rhs, tau, cfg.params.nu, ops.zero_flux,
                        cfg.graph, cfg.inclusion, cfg.linear)

    pres = solve_pressure(prev.p, phase.chi, prev.chi, tau, ops.robin,
                          cfg.linear, forcing=forcings.get("pressure"))

    theta, newton_iters, cg_temp = solve_temperature(
        prev.theta, phase.chi, prev.chi, tau, ops.zero_flux,
        cfg.energy_map, cfg.linear, newton_tol=cfg.newton_tol,
        forcing=forcings.get("temperature"))

    new = State(index=prev.index + 1, time=prev.time + tau,
                theta=theta, chi=phase.chi, p=pres.x,
                e=internal_energy(theta, phase.chi, cfg.curve),
                u=pres.x / (1.0 + phase.chi),
                xi=phase.xi)
    _check_state(new, cfg)
    stats = StepStats(sweep_iters=phase.sweeps, newton_iters=newton_iters,
                      cg_iters=phase.cg_iters + pres.iters + cg_temp)
    return new, stats


def run(theta0: np.ndarray, chi0: np.ndarray, p0: np.ndarray,
        cfg: RunConfig) -> RunResult:
    """Run the full scheme; per-step ledger always, snapshots at cadence.

    Invariant violations raise immediately (the ledger rows recorded so
    far stay available on the exception's ``partial`` attribute)."""
    from .diagnostics import DiagnosticsLedger

    ops = make_operators(cfg)
    floored = int(np.count_nonzero(np.asarray(p0, dtype=float) < cfg.tau))
    state = init_state(theta0, chi0, p0, cfg)
    ledger = DiagnosticsLedger(cfg)
    states = [state]
    try:
        for _ in range(cfg.n_steps):
            new, stats = step(state, cfg, ops)
            ledger.record_step(state, new, stats)
            if new.index % cfg.snapshot_every == 0 or new.index == cfg.n_steps:
                states.append(new)
            state = new
    except Exception as exc:
        exc.partial = RunResult(states=states, ledger=ledger,
                                floored_cells=floored)
        raise
    return RunResult(states=states, ledger=ledger, floored_cells=floored)
