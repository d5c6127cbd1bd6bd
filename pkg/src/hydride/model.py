"""Constitutive layer of the hydride-storage model.

This module owns everything that is pointwise in space: the physical
constants, the smooth plateau-pressure curve ``h`` (log of the
temperature-dependent equilibrium pressure), the internal-energy change
of variables ``e = psi(theta, chi)`` and its inverse, the maximal
monotone graph constraining the phase fraction, and the two diagnostic
functionals (enthalpy density and dissipation potential).

Everything here is a pure function of immutable inputs and can be called
from any number of threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, DomainError, GraphError

__all__ = [
    "ModelParams",
    "PlateauCurve",
    "AdmissibilityRecord",
    "InternalEnergyMap",
    "MonotoneGraph",
    "build_plateau_curve",
    "certify_curve",
    "internal_energy",
    "internal_energy_slope",
    "invert_internal_energy",
    "enthalpy",
    "dissipation_potential",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical and constitutive constants, dimensionless after normalization.

    The evolution engine runs the normalized system (unit coefficients on
    the diffusive and kinetic terms), so most of these constants only enter
    the diagnostic functionals.  ``nu`` weighs the phase-gradient
    dissipation and does enter the phase update; ``gamma`` is the Robin
    exchange coefficient of the pressure boundary condition.
    """

    a: float = 1.0
    b: float = 1.0
    c_p: float = 1.0
    lambda_diff: float = 1.0
    k0: float = 1.0
    delta: float = 1.0
    mu: float = 1.0
    nu: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        for name in ("a", "b", "c_p", "lambda_diff", "k0", "delta", "mu", "gamma"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"ModelParams.{name} must be > 0")
        if self.nu < 0.0:
            raise DomainError("ModelParams.nu must be >= 0")


@dataclass(frozen=True)
class AdmissibilityRecord:
    """Certified bounds of a plateau curve.

    ``c_h``       upper bound of |h| + |h'| + |h''| + |z h'(z)| over the line.
    ``c_h_prime`` upper bound of |z h''(z)|.
    ``c_s``       parabolicity margin 1 - lambda_beta * c_h_prime; must stay
                  strictly positive for the temperature step to be a
                  strongly monotone problem.
    ``lambda_beta`` the phase-interval width the certificate was issued for.
    """

    c_h: float
    c_h_prime: float
    c_s: float
    lambda_beta: float
    sample_count: int


@dataclass(frozen=True)
class PlateauCurve:
    """C^2 log-plateau-pressure curve with three branches.

    Warm branch (z >= theta_star): the Van't Hoff law -c1/z + c2.
    Transition (theta_star_star <= z < theta_star): the unique quartic
    matching value, slope and curvature of the warm branch at
    ``theta_star`` and having zero slope and curvature at
    ``theta_star_star``.
    Cold branch (z < theta_star_star): the constant equal to the blend's
    value at ``theta_star_star``.

    The blend is stored in shifted form ``q(z) = a0 + a3 s^3 + a4 s^4``
    with ``s = z - theta_star_star``; the two vanished coefficients encode
    the zero slope/curvature conditions exactly.
    """

    c1: float
    c2: float
    theta_star: float
    theta_star_star: float
    blend_coeffs: tuple[float, float, float, float, float]  # a0..a4 in s
    h_const: float
    certificate: AdmissibilityRecord | None = None

    def _split(self, z):
        z = np.asarray(z, dtype=float)
        cold = z < self.theta_star_star
        warm = z >= self.theta_star
        mid = ~(cold | warm)
        return z, cold, mid, warm

    def value(self, z):
        z, cold, mid, warm = self._split(z)
        out = np.empty_like(z)
        out[cold] = self.h_const
        a0, a1, a2, a3, a4 = self.blend_coeffs
        s = z[mid] - self.theta_star_star
        out[mid] = a0 + s * (a1 + s * (a2 + s * (a3 + s * a4)))
        zw = z[warm]
        out[warm] = -self.c1 / zw + self.c2
        return out if out.ndim else float(out)

    def deriv(self, z):
        z, cold, mid, warm = self._split(z)
        out = np.empty_like(z)
        out[cold] = 0.0
        _, a1, a2, a3, a4 = self.blend_coeffs
        s = z[mid] - self.theta_star_star
        out[mid] = a1 + s * (2 * a2 + s * (3 * a3 + s * 4 * a4))
        zw = z[warm]
        out[warm] = self.c1 / zw**2
        return out if out.ndim else float(out)

    def deriv2(self, z):
        z, cold, mid, warm = self._split(z)
        out = np.empty_like(z)
        out[cold] = 0.0
        _, _, a2, a3, a4 = self.blend_coeffs
        s = z[mid] - self.theta_star_star
        out[mid] = 2 * a2 + s * (6 * a3 + s * 12 * a4)
        zw = z[warm]
        out[warm] = -2 * self.c1 / zw**3
        return out if out.ndim else float(out)


def build_plateau_curve(c1: float, c2: float, theta_star: float,
                        theta_star_star: float) -> PlateauCurve:
    """Construct the three-branch C^2 curve from Van't Hoff coefficients.

    The quartic transition is obtained from a 3x3 Hermite system in the
    shifted variable s = z - theta_star_star (the zero slope/curvature
    conditions at the cold threshold force the s^1 and s^2 coefficients to
    vanish, so only the constant, cubic and quartic terms remain).
    """
    if not (c1 > 0.0 and c2 > 0.0):
        raise DomainError("Van't Hoff coefficients c1, c2 must be > 0")
    if not (0.0 < theta_star_star < theta_star):
        raise DomainError("thresholds must satisfy 0 < theta_star_star < theta_star")

    d = theta_star - theta_star_star
    w = -c1 / theta_star + c2
    w1 = c1 / theta_star**2
    w2 = -2.0 * c1 / theta_star**3
    mat = np.array([
        [1.0, d**3, d**4],
        [0.0, 3.0 * d**2, 4.0 * d**3],
        [0.0, 6.0 * d, 12.0 * d**2],
    ])
    a0, a3, a4 = np.linalg.solve(mat, np.array([w, w1, w2]))
    return PlateauCurve(
        c1=c1, c2=c2,
        theta_star=theta_star, theta_star_star=theta_star_star,
        blend_coeffs=(float(a0), 0.0, 0.0, float(a3), float(a4)),
        h_const=float(a0),
    )


def _blend_polys(curve: PlateauCurve):
    # Polynomials in s = z - theta_star_star on [0, d], low-degree-first.
    a0, _, _, a3, a4 = curve.blend_coeffs
    tss = curve.theta_star_star
    h = np.polynomial.Polynomial([a0, 0.0, 0.0, a3, a4])
    zpoly = np.polynomial.Polynomial([tss, 1.0])
    return {
        "h": h,
        "h1": h.deriv(1),
        "h2": h.deriv(2),
        "zh1": zpoly * h.deriv(1),
        "zh2": zpoly * h.deriv(2),
    }


def _poly_sup(poly, lo: float, hi: float, n: int) -> float:
    """Certified sup of |poly| on [lo, hi]: dense samples plus a curvature
    margin that dominates the gap between the sampled and the true sup."""
    s = np.linspace(lo, hi, n)
    vals = np.abs(poly(s))
    d2 = np.abs(poly.deriv(2)(s))
    step = (hi - lo) / (n - 1)
    return float(vals.max() + (step**2 / 8.0) * 1.05 * d2.max())


def certify_curve(curve: PlateauCurve, lambda_beta: float,
                  sample_grid: int = 10_000) -> AdmissibilityRecord:
    """Compute the admissibility constants and the parabolicity margin.

    The warm and cold branches admit calculus extrema (every tracked warm
    quantity is monotone on [theta_star, inf)); the quartic transition is
    bounded by dense sampling with an explicit second-derivative margin,
    so a finer re-sampling can never exceed the certified constants.

    Raises :class:`AdmissibilityError` when 1 - lambda_beta * c_h_prime
    fails to stay positive: the temperature equation then loses its
    monotone structure and no run is attempted.
    """
    if not lambda_beta > 0.0:
        raise DomainError("lambda_beta must be > 0")
    if sample_grid < 2:
        raise DomainError("sample_grid must be >= 2")

    ts, tss, c1, c2 = (curve.theta_star, curve.theta_star_star,
                       curve.c1, curve.c2)

    # --- c_h: sup of |h| + |h'| + |h''| + |z h'| --------------------------
    cold_sum = abs(curve.h_const)
    # On the warm branch |h| <= max(|h(ts)|, c2) while the remaining three
    # terms are positive and strictly decreasing, so their values at ts
    # give a valid (slightly generous) upper bound for the sum.
    warm_sum = (max(abs(-c1 / ts + c2), abs(c2))
                + c1 / ts**2 + 2.0 * c1 / ts**3 + c1 / ts)
    polys = _blend_polys(curve)
    d = ts - tss
    s = np.linspace(0.0, d, sample_grid)
    blend_sum_vals = (np.abs(polys["h"](s)) + np.abs(polys["h1"](s))
                      + np.abs(polys["h2"](s)) + np.abs(polys["zh1"](s)))
    blend_sum_d2 = sum(np.abs(polys[k].deriv(2)(s)).max()
                       for k in ("h", "h1", "h2", "zh1"))
    step = d / (sample_grid - 1)
    blend_sum = float(blend_sum_vals.max()
                      + (step**2 / 8.0) * 1.05 * blend_sum_d2)
    c_h = max(cold_sum, warm_sum, blend_sum)

    # --- c_h_prime: sup of |z h''| ----------------------------------------
    warm_zh2 = 2.0 * c1 / ts**2          # |−2 c1 / z^2| peaks at z = ts
    blend_zh2 = _poly_sup(polys["zh2"], 0.0, d, sample_grid)
    c_h_prime = max(0.0, warm_zh2, blend_zh2)

    c_s = 1.0 - lambda_beta * c_h_prime
    if c_s <= 0.0:
        raise AdmissibilityError(
            f"lambda_beta * c_h_prime = {lambda_beta * c_h_prime:.6g} >= 1 "
            f"(lambda_beta={lambda_beta:.6g}, c_h_prime={c_h_prime:.6g}); "
            "the model loses parabolicity")
    return AdmissibilityRecord(c_h=c_h, c_h_prime=c_h_prime, c_s=c_s,
                               lambda_beta=lambda_beta,
                               sample_count=sample_grid)


@dataclass(frozen=True)
class InternalEnergyMap:
    """Slope-certified view of the change of variables e = psi(theta, chi).

    ``slope_min``/``slope_max`` bracket d(psi)/d(theta) uniformly over the
    admissible phase interval, which makes the map bi-Lipschitz in theta
    and the inversion bracket explicit.
    """

    curve: PlateauCurve
    record: AdmissibilityRecord

    @property
    def slope_min(self) -> float:
        return self.record.c_s

    @property
    def slope_max(self) -> float:
        return 1.0 + self.record.lambda_beta * self.record.c_h_prime


def internal_energy(theta, chi, curve: PlateauCurve):
    """e = theta - chi * (h(theta) - theta * h'(theta))."""
    theta = np.asarray(theta, dtype=float)
    chi = np.asarray(chi, dtype=float)
    out = theta - chi * (curve.value(theta) - theta * curve.deriv(theta))
    return out if out.ndim else float(out)


def internal_energy_slope(theta, chi, curve: PlateauCurve):
    """d(psi)/d(theta) = 1 + chi * theta * h''(theta)."""
    theta = np.asarray(theta, dtype=float)
    chi = np.asarray(chi, dtype=float)
    out = 1.0 + chi * theta * curve.deriv2(theta)
    return out if out.ndim else float(out)


def invert_internal_energy(e, chi, emap: InternalEnergyMap,
                           tol: float = 1e-12, max_iter: int = 120):
    """Solve psi(theta, chi) = e for theta (unique by monotonicity).

    Safeguarded Newton: the bi-Lipschitz slope bounds give the initial
    bracket [e - c_h*lambda_beta/c_s, e + c_h*lambda_beta/c_s]; iterates
    falling outside the current sign-change bracket are replaced by
    bisection steps.  Vectorized over arrays.
    """
    from .errors import NoConvergence

    if not tol > 0.0:
        raise DomainError("tol must be > 0")
    e = np.atleast_1d(np.asarray(e, dtype=float))
    chi = np.broadcast_to(np.asarray(chi, dtype=float), e.shape).copy()
    scalar = e.size == 1 and np.ndim(e) == 1

    span = emap.record.c_h * emap.record.lambda_beta / emap.record.c_s
    lo = e - span
    hi = e + span
    curve = emap.curve

    theta = e.copy()
    f = internal_energy(theta, chi, curve) - e
    done = np.abs(f) <= tol
    for _ in range(max_iter):
        if done.all():
            break
        hi = np.where(~done & (f > 0.0), np.minimum(hi, theta), hi)
        lo = np.where(~done & (f < 0.0), np.maximum(lo, theta), lo)
        slope = internal_energy_slope(theta, chi, curve)
        step = np.where(slope > 0.0, f / np.where(slope > 0.0, slope, 1.0), 0.0)
        cand = theta - step
        bad = (cand <= lo) | (cand >= hi) | (slope <= 0.0)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        theta = np.where(done, theta, cand)
        f = internal_energy(theta, chi, curve) - e
        done = done | (np.abs(f) <= tol)
    else:
        raise NoConvergence(
            "internal-energy inversion exhausted its iteration budget; "
            "the curve certificate is suspect")
    return float(theta[0]) if scalar and theta.shape == (1,) else theta


@dataclass(frozen=True)
class MonotoneGraph:
    """Maximal monotone graph on the phase fraction, handled via its prox.

    The canonical instance is the subdifferential of the indicator of
    [0, lambda_beta], whose prox map is the clamp to that interval for
    every implicit weight sigma.  Arbitrary graphs with bounded domain can
    be supplied through a prox callback; the engine only ever touches the
    graph through ``prox``, ``potential`` and the membership residual.
    """

    lambda_beta: float
    lo: float
    hi: float
    chi_star: float
    prox_fn: Callable[[np.ndarray, float], np.ndarray] | None = None
    potential_fn: Callable[[np.ndarray], np.ndarray] | None = None

    @classmethod
    def interval(cls, lambda_beta: float, chi_star: float | None = None) -> "MonotoneGraph":
        if not lambda_beta > 0.0:
            raise DomainError("lambda_beta must be > 0")
        if chi_star is None:
            chi_star = 0.5 * lambda_beta
        if not (0.0 < chi_star < lambda_beta):
            raise DomainError("chi_star must lie in the open domain interior")
        return cls(lambda_beta=lambda_beta, lo=0.0, hi=lambda_beta,
                   chi_star=chi_star)

    @classmethod
    def custom(cls, prox_fn: Callable, domain: tuple[float, float],
               lambda_beta: float | None = None,
               chi_star: float | None = None,
               potential_fn: Callable | None = None) -> "MonotoneGraph":
        lo, hi = float(domain[0]), float(domain[1])
        if not (0.0 <= lo < hi):
            raise DomainError("custom graph domain must satisfy 0 <= lo < hi")
        if lambda_beta is None:
            lambda_beta = hi
        if chi_star is None:
            chi_star = 0.5 * (lo + hi)
        if not (lo < chi_star < hi):
            raise DomainError("chi_star must lie in the open domain interior")
        return cls(lambda_beta=float(lambda_beta), lo=lo, hi=hi,
                   chi_star=chi_star, prox_fn=prox_fn,
                   potential_fn=potential_fn)

    @property
    def is_interval(self) -> bool:
        return self.prox_fn is None

    def prox(self, z, sigma: float):
        """argmin_s potential(s) + (s - z)^2 / (2 sigma); the resolvent."""
        if not sigma > 0.0:
            raise DomainError("prox weight sigma must be > 0")
        z = np.asarray(z, dtype=float)
        if self.prox_fn is None:
            out = np.clip(z, self.lo, self.hi)
        else:
            try:
                out = np.asarray(self.prox_fn(z, sigma), dtype=float)
            except Exception as exc:  # noqa: BLE001 - callback boundary
                raise GraphError(f"custom prox callback failed: {exc}") from exc
            if out.shape != z.shape:
                raise GraphError("custom prox returned wrong shape")
            if np.any(out < self.lo - 1e-14) or np.any(out > self.hi + 1e-14):
                raise GraphError("custom prox left the graph domain")
        return out if out.ndim else float(out)

    def potential(self, x):
        """The convex potential whose subdifferential is the graph."""
        x = np.asarray(x, dtype=float)
        if self.potential_fn is not None:
            out = np.asarray(self.potential_fn(x), dtype=float)
        else:
            inside = (x >= self.lo) & (x <= self.hi)
            out = np.where(inside, 0.0, np.inf)
        return out if out.ndim else float(out)

    def membership_residual(self, chi, xi, sigma: float = 1.0):
        """|chi - prox(chi + sigma*xi)|; zero exactly when xi in beta(chi)."""
        chi = np.asarray(chi, dtype=float)
        xi = np.asarray(xi, dtype=float)
        out = np.abs(chi - self.prox(chi + sigma * xi, sigma))
        return out if out.ndim else float(out)


def enthalpy(theta, p, chi, grad_chi_sq, params: ModelParams,
             curve: PlateauCurve, chi_domain: tuple[float, float] = (0.0, 1.0)):
    """Diagnostic enthalpy density.

    a log p + b chi (log p - h(theta)) - c_p theta log theta
    + (delta/2) |grad chi|^2, with a +inf sentinel outside the phase
    domain.  The sentinel never feeds a solve; this functional exists only
    for ledgers and post-processing.
    """
    theta = np.asarray(theta, dtype=float)
    p = np.asarray(p, dtype=float)
    chi = np.asarray(chi, dtype=float)
    grad_chi_sq = np.asarray(grad_chi_sq, dtype=float)
    if np.any(p <= 0.0):
        raise DomainError("enthalpy requires p > 0")
    if np.any(theta <= 0.0):
        raise DomainError("enthalpy requires theta > 0")
    logp = np.log(p)
    val = (params.a * logp
           + params.b * chi * (logp - curve.value(theta))
           - params.c_p * theta * np.log(theta)
           + 0.5 * params.delta * grad_chi_sq)
    lo, hi = chi_domain
    out = np.where((chi < lo) | (chi > hi), np.inf, val)
    return out if out.ndim else float(out)


def dissipation_potential(chi_t, grad_chi_t_sq, grad_theta_sq, theta,
                          params: ModelParams):
    """(mu/2) chi_t^2 + (nu/2)|grad chi_t|^2 + (k0/(2 theta))|grad theta|^2.

    Nonnegative and zero at zero rates; requires theta > 0.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0.0):
        raise DomainError("dissipation potential requires theta > 0")
    chi_t = np.asarray(chi_t, dtype=float)
    out = (0.5 * params.mu * chi_t**2
           + 0.5 * params.nu * np.asarray(grad_chi_t_sq, dtype=float)
           + (params.k0 / (2.0 * theta)) * np.asarray(grad_theta_sq, dtype=float))
    return out if out.ndim else float(out)
