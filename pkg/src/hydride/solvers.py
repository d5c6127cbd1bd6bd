"""The three sub-solvers composing one implicit step.

The step decouples into (in this order): the phase inclusion, a linear
Robin pressure solve, and a strongly monotone temperature solve.  The
inclusion is handled either by projected Gauss-Seidel sweeps (exact
clamping, the default) or by continuation in the Yosida regularization of
the graph followed by semismooth Newton solves; the two strategies are a
deliberate dual route and must agree.

All solvers are stateless between calls and mutate only their own
workspace; concurrent solves on distinct problems are safe.  The
Gauss-Seidel sweep is strictly sequential in lexicographic cell order
within one solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .errors import (DomainError, GraphInconsistency, MaxIterations,
                     NoConvergence)
from .grid import (Grid, RobinLaplacian, ZeroFluxLaplacian, inner,
                   integrate, norm_l2, norm_linf)
from .model import (InternalEnergyMap, MonotoneGraph, PlateauCurve,
                    internal_energy, internal_energy_slope)

__all__ = [
    "LinearSolveConfig",
    "InclusionSolveConfig",
    "CgResult",
    "PhaseResult",
    "conjugate_gradient",
    "solve_phase",
    "solve_pressure",
    "solve_temperature",
]

PROJECTED_SWEEP = "projected_sweep"
YOSIDA = "yosida"


@dataclass(frozen=True)
class LinearSolveConfig:
    tol_rel: float = 1e-12
    tol_abs: float = 1e-14
    max_iter: int = 50_000

    def __post_init__(self):
        if not (self.tol_rel > 0.0 and self.tol_abs > 0.0):
            raise DomainError("linear tolerances must be > 0")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


@dataclass(frozen=True)
class InclusionSolveConfig:
    strategy: str = PROJECTED_SWEEP
    sweep_tol: float = 1e-11
    yosida_lambda_start: float = 1e-2
    yosida_lambda_min: float = 1e-8
    max_outer: int = 20_000
    membership_tol: float = 1e-6

    def __post_init__(self):
        if self.strategy not in (PROJECTED_SWEEP, YOSIDA):
            raise DomainError(f"unknown inclusion strategy {self.strategy!r}")
        if not (self.sweep_tol > 0.0 and self.yosida_lambda_start > 0.0
                and self.yosida_lambda_min > 0.0):
            raise DomainError("inclusion tolerances must be > 0")
        if not self.yosida_lambda_min < self.yosida_lambda_start:
            raise DomainError("yosida_lambda_min must be < yosida_lambda_start")
        if self.max_outer < 1:
            raise DomainError("max_outer must be >= 1")


class CgResult(NamedTuple):
    x: np.ndarray
    iters: int


class PhaseResult(NamedTuple):
    chi: np.ndarray
    xi: np.ndarray
    sweeps: int
    cg_iters: int


def conjugate_gradient(apply_op: Callable[[np.ndarray], np.ndarray],
                       rhs: np.ndarray, grid: Grid, cfg: LinearSolveConfig,
                       x0: np.ndarray | None = None,
                       precond_diag: np.ndarray | None = None) -> CgResult:
    """Matrix-free CG for a symmetric positive definite operator.

    Converges to  ||apply(x) - rhs||_L2 <= max(tol_abs, tol_rel ||rhs||).
    ``precond_diag``, when given, enables Jacobi preconditioning (needed
    when an implicit penalty spreads the diagonal over many decades).
    """
    rhs = grid.check_field(np.asarray(rhs, dtype=float))
    target = max(cfg.tol_abs, cfg.tol_rel * norm_l2(grid, rhs))
    x = np.zeros_like(rhs) if x0 is None else x0.astype(float).copy()
    r = rhs - apply_op(x)
    if norm_l2(grid, r) <= target:
        return CgResult(x, 0)

    if precond_diag is None:
        def precond(v):
            return v
    else:
        inv_diag = 1.0 / precond_diag

        def precond(v):
            return inv_diag * v

    z = precond(r)
    d = z.copy()
    rz = inner(grid, r, z)
    for it in range(1, cfg.max_iter + 1):
        ad = apply_op(d)
        dad = inner(grid, d, ad)
        if dad <= 0.0:
            raise MaxIterations("CG met a non-positive curvature direction; "
                                "operator is not SPD")
        alpha = rz / dad
        x += alpha * d
        r -= alpha * ad
        if it % 64 == 0:
            r = rhs - apply_op(x)  # drift control
        if norm_l2(grid, r) <= target:
            r_true = rhs - apply_op(x)
            if norm_l2(grid, r_true) <= target:
                return CgResult(x, it)
            r = r_true
        z = precond(r)
        rz_new = inner(grid, r, z)
        d = z + (rz_new / rz) * d
        rz = rz_new
    raise MaxIterations(f"CG did not reach {target:.3e} in {cfg.max_iter} iterations")


# --- phase inclusion ---------------------------------------------------------


def _as3d(v: np.ndarray) -> np.ndarray:
    return v.reshape(v.shape + (1,) * (3 - v.ndim))


def _inv_h2(grid: Grid) -> tuple[float, float, float]:
    out = [0.0, 0.0, 0.0]
    for axis in range(grid.dim):
        out[axis] = 1.0 / grid.spacing[axis] ** 2
    return tuple(out)


def _natural_residual(chi, rhs, lap, graph, kappa, inv_tau):
    """Jacobi-form fixed-point residual of the cell-wise prox map; zero
    exactly at the solution of the discrete inclusion."""
    diag = inv_tau + kappa * lap.stencil_diag
    z = (rhs - kappa * lap.offdiag_apply(chi)) / diag
    if graph.is_interval:
        target = np.clip(z, graph.lo, graph.hi)
    else:
        target = np.empty_like(z)
        flat_z = z.ravel()
        flat_d = diag.ravel() if isinstance(diag, np.ndarray) else None
        tgt = target.ravel()
        for idx in range(flat_z.size):
            sigma = 1.0 / (flat_d[idx] if flat_d is not None else diag)
            tgt[idx] = graph.prox(flat_z[idx], sigma)
    return float(np.max(np.abs(chi - target)))


def _python_sweep(chi, rhs, lap, graph, kappa, inv_tau):
    # Reference sweep for custom graphs: lexicographic, x fastest.
    grid = lap.grid
    shape3 = _as3d(chi).shape
    c3 = _as3d(chi)
    r3 = _as3d(rhs)
    ih = _inv_h2(grid)
    nx, ny, nz = shape3
    for iz in range(nz):
        for iy in range(ny):
            for ix in range(nx):
                acc = 0.0
                diag = inv_tau
                for axis, (i, n, ihx) in enumerate(
                        ((ix, nx, ih[0]), (iy, ny, ih[1]), (iz, nz, ih[2]))):
                    if i > 0:
                        nb = (ix - (axis == 0), iy - (axis == 1), iz - (axis == 2))
                        acc += ihx * c3[nb]
                        diag += kappa * ihx
                    if i < n - 1:
                        nb = (ix + (axis == 0), iy + (axis == 1), iz + (axis == 2))
                        acc += ihx * c3[nb]
                        diag += kappa * ihx
                z = (r3[ix, iy, iz] + kappa * acc) / diag
                c3[ix, iy, iz] = graph.prox(z, 1.0 / diag)


def _solve_phase_sweep(chi0, rhs, lap, graph, kappa, inv_tau, cfg):
    chi = chi0.astype(float).copy()
    ih = _inv_h2(lap.grid)
    sweeps = 0
    while True:
        if graph.is_interval:
            _kernels.pgs_sweep_interval(_as3d(chi), _as3d(rhs), kappa, inv_tau,
                                        ih[0], ih[1], ih[2], graph.lo, graph.hi)
        else:
            _python_sweep(chi, rhs, lap, graph, kappa, inv_tau)
        sweeps += 1
        if sweeps % 4 == 0 or sweeps <= 2:
            if _natural_residual(chi, rhs, lap, graph, kappa, inv_tau) <= cfg.sweep_tol:
                return chi, sweeps
        if sweeps >= cfg.max_outer:
            raise NoConvergence(
                f"projected sweep stalled above tol={cfg.sweep_tol:.1e} "
                f"after {sweeps} sweeps")


def _yosida_value(graph, x, lam):
    return (x - graph.prox(x, lam)) / lam


def _yosida_slope(graph, x, lam):
    if graph.is_interval:
        outside = (x < graph.lo) | (x > graph.hi)
        return np.where(outside, 1.0 / lam, 0.0)
    # symmetric difference of the regularized graph; differences of the
    # nonexpansive prox are numerically stable
    eps = 1e-8 * np.maximum(1.0, np.abs(x))
    hi = _yosida_value(graph, x + eps, lam)
    lo = _yosida_value(graph, x - eps, lam)
    return np.clip((hi - lo) / (2.0 * eps), 0.0, 1.0 / lam)


def _solve_phase_yosida(chi0, rhs, lap, graph, kappa, inv_tau, cfg, lin_cfg):
    grid = lap.grid
    chi = chi0.astype(float).copy()
    cg_total = 0
    newton_total = 0
    lam = cfg.yosida_lambda_start
    levels = []
    while lam > cfg.yosida_lambda_min:
        levels.append(lam)
        lam /= 4.0
    levels.append(cfg.yosida_lambda_min)

    scale0 = 1.0 + float(np.max(np.abs(chi))) + graph.hi
    eps = float(np.finfo(float).eps)
    for lam in levels:
        # the iterate carries an eps-level rounding that (x - prox(x))/lam
        # amplifies by 1/lam, flooring any reachable residual; generic prox
        # callbacks add further cancellation on top of the exact clamp
        floor = 4.0 * eps * max(1.0, graph.hi) / lam
        if not graph.is_interval:
            floor = max(floor, 50.0 * eps * scale0 / lam)
        level_tol = max(cfg.sweep_tol, 1e-3 * lam, floor)

        def residual(c):
            return (inv_tau * c + kappa * lap.apply(c)
                    + _yosida_value(graph, c, lam) - rhs)

        r = residual(chi)
        rnorm = norm_l2(grid, r)
        it = 0
        cap = min(200, cfg.max_outer)
        while rnorm > level_tol:
            if it >= cap:
                raise NoConvergence(
                    f"Yosida Newton stalled at level lambda={lam:.2e} "
                    f"(residual {rnorm:.3e}, tolerance {level_tol:.3e})")
            w = inv_tau + _yosida_slope(graph, chi, lam)

            def jac(d, w=w):
                return w * d + kappa * lap.apply(d)

            step, cg_it = conjugate_gradient(
                jac, r, grid, lin_cfg,
                precond_diag=w + kappa * lap.stencil_diag)
            cg_total += cg_it
            best = None
            scale = 1.0
            for _ in range(40):
                cand = chi - scale * step
                rc = residual(cand)
                rc_norm = norm_l2(grid, rc)
                if best is None or rc_norm < best[2]:
                    best = (cand, rc, rc_norm)
                if rc_norm <= (1.0 - 1e-4 * scale) * rnorm:
                    break
                scale *= 0.5
            chi, r, rnorm = best
            it += 1
            newton_total += 1

    # the resolvent evaluation is the exact projection onto the domain
    chi = np.clip(chi, graph.lo, graph.hi)
    return chi, newton_total, cg_total, levels[-1]


def solve_phase(chi_prev: np.ndarray, rhs: np.ndarray, tau: float, nu: float,
                lap: ZeroFluxLaplacian, graph: MonotoneGraph,
                cfg: InclusionSolveConfig,
                lin_cfg: LinearSolveConfig | None = None) -> PhaseResult:
    """Solve  chi/tau + (1 + nu/tau) L chi + xi = rhs,  xi in beta(chi).

    The reaction xi is recovered by residual substitution and checked
    cell-wise for graph membership; a violation beyond tolerance is a
    solver failure, not a warning.
    """
    if not tau > 0.0:
        raise DomainError("tau must be > 0")
    grid = lap.grid
    rhs = grid.check_field(np.asarray(rhs, dtype=float))
    chi_prev = grid.check_field(np.asarray(chi_prev, dtype=float))
    kappa = 1.0 + nu / tau
    inv_tau = 1.0 / tau
    lin_cfg = lin_cfg or LinearSolveConfig()

    lam_fin = 0.0
    if cfg.strategy == PROJECTED_SWEEP:
        chi, sweeps = _solve_phase_sweep(chi_prev, rhs, lap, graph, kappa,
                                         inv_tau, cfg)
        cg_iters = 0
    else:
        chi, sweeps, cg_iters, lam_fin = _solve_phase_yosida(
            chi_prev, rhs, lap, graph, kappa, inv_tau, cfg, lin_cfg)

    xi = rhs - inv_tau * chi - kappa * lap.apply(chi)

    # Membership tolerance: the Yosida route leaves an O(lambda) slack in
    # the recovered reaction near constrained cells; account for it.
    slack = cfg.membership_tol
    if lam_fin > 0.0:
        stiff = inv_tau + 2.0 * kappa * float(np.max(lap.stencil_diag))
        slack = max(slack, 10.0 * lam_fin * stiff * (1.0 + norm_linf(grid, xi)))
    bad = graph.membership_residual(chi, xi)
    worst = float(np.max(bad)) if np.ndim(bad) else float(bad)
    if worst > slack:
        raise GraphInconsistency(
            f"recovered reaction violates graph membership by {worst:.3e} "
            f"(tolerance {slack:.3e})")
    return PhaseResult(chi=chi, xi=xi, sweeps=sweeps, cg_iters=cg_iters)


# --- pressure ----------------------------------------------------------------


def solve_pressure(p_prev: np.ndarray, chi_new: np.ndarray,
                   chi_prev: np.ndarray, tau: float, rob: RobinLaplacian,
                   cfg: LinearSolveConfig,
                   forcing: np.ndarray | None = None,
                   mass_tol: float | None = None) -> CgResult:
    """Solve  P/(tau (1+chi_new)) + R P = p_prev/(tau (1+chi_prev)).

    The composite operator is SPD because 1/(1+chi) stays in
    [1/(1+lambda_beta), 1]; it is also an M-matrix, which propagates
    strict positivity of the previous pressure.  The solve is tightened
    until the constant-test-function mass identity holds to ``mass_tol``
    relative to the previous mass (default 10x the configured relative
    tolerance), so the mass ledger bound is honored by construction.
    """
    if not tau > 0.0:
        raise DomainError("tau must be > 0")
    grid = rob.grid
    p_prev = grid.check_field(np.asarray(p_prev, dtype=float))
    coef = 1.0 / (tau * (1.0 + np.asarray(chi_new, dtype=float)))
    rhs = p_prev / (tau * (1.0 + np.asarray(chi_prev, dtype=float)))
    if forcing is not None:
        rhs = rhs + forcing

    def op(x):
        return coef * x + rob.apply(x)

    if mass_tol is None:
        mass_tol = 10.0 * cfg.tol_rel
    u_prev_mass = abs(integrate(grid, p_prev / (1.0 + chi_prev)))
    eff = cfg
    total = 0
    x0 = None
    for attempt in range(4):
        p, iters = conjugate_gradient(op, rhs, grid, eff, x0=x0)
        total += iters
        r = rhs - op(p)
        mass_residual = abs(integrate(grid, r))
        if u_prev_mass > 0.0 and mass_residual / u_prev_mass <= 0.9 * mass_tol:
            return CgResult(p, total)
        if u_prev_mass == 0.0:
            return CgResult(p, total)
        x0 = p
        eff = LinearSolveConfig(tol_rel=max(eff.tol_rel * 1e-2, 1e-16),
                                tol_abs=max(eff.tol_abs * 1e-2, 1e-18),
                                max_iter=eff.max_iter)
    raise MaxIterations("pressure solve could not meet the mass-balance bound")


# --- temperature -------------------------------------------------------------


def temperature_rhs(theta_prev: np.ndarray, chi_new: np.ndarray,
                    chi_prev: np.ndarray, tau: float,
                    curve: PlateauCurve) -> np.ndarray:
    """Known right-hand side of the temperature step: the previous internal
    energy carried forward, the lagged latent-heat flux, and the pointwise
    quadratic kinetic heat source."""
    rate = (chi_new - chi_prev) / tau
    return (theta_prev * (1.0 + curve.deriv(theta_prev) * chi_prev)
            - curve.value(theta_prev) * chi_new) / tau + rate**2


def solve_temperature(theta_prev: np.ndarray, chi_new: np.ndarray,
                      chi_prev: np.ndarray, tau: float,
                      lap: ZeroFluxLaplacian, emap: InternalEnergyMap,
                      cfg: LinearSolveConfig, newton_tol: float = 1e-10,
                      max_newton: int = 30,
                      forcing: np.ndarray | None = None) -> tuple[np.ndarray, int, int]:
    """Solve  psi(T, chi_new)/tau + L T = G  by Newton iteration.

    The map is Lipschitz and strongly monotone (slope of psi bounded below
    by the certified c_s), so Newton with a backtracking safeguard
    converges; exceeding the iteration cap signals a broken certificate
    and is fatal.  Returns (theta, newton_iters, cg_iters).
    """
    if not tau > 0.0:
        raise DomainError("tau must be > 0")
    grid = lap.grid
    theta_prev = grid.check_field(np.asarray(theta_prev, dtype=float))
    curve = emap.curve
    g = temperature_rhs(theta_prev, chi_new, chi_prev, tau, curve)
    if forcing is not None:
        g = g + forcing
    inv_tau = 1.0 / tau

    def residual(t):
        return inv_tau * internal_energy(t, chi_new, curve) + lap.apply(t) - g

    theta = theta_prev.copy()
    r = residual(theta)
    rnorm = norm_l2(grid, r)
    cg_total = 0
    for it in range(1, max_newton + 1):
        if rnorm <= newton_tol:
            return theta, it - 1, cg_total
        slope = inv_tau * internal_energy_slope(theta, chi_new, curve)

        def jac(d, slope=slope):
            return slope * d + lap.apply(d)

        step, cg_it = conjugate_gradient(jac, r, grid, cfg)
        cg_total += cg_it
        scale = 1.0
        for _ in range(40):
            cand = theta - scale * step
            rc = residual(cand)
            rc_norm = norm_l2(grid, rc)
            if rc_norm <= (1.0 - 1e-4 * scale) * rnorm or rc_norm <= newton_tol:
                break
            scale *= 0.5
        theta, r, rnorm = cand, rc, rc_norm
    if rnorm <= newton_tol:
        return theta, max_newton, cg_total
    raise NoConvergence(
        f"temperature Newton failed to reach {newton_tol:.1e} "
        f"in {max_newton} iterations (residual {rnorm:.3e}); "
        "the curve certificate is suspect")
