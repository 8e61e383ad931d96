"""Closed-form first QLM iteration for the Yukawa potential.

y1 = y0 + Phi/chi0^2 with Phi written through exponential integrals. Phi is
defined here to pair with the *normalized* chi0, i.e. it carries the factor
N^2; the ratio Phi/chi0^2 does not depend on that choice.

Near the origin Phi and chi0^2 both vanish (Phi ~ r^3, chi0^2 ~ r^2) and the
closed form loses all digits to cancellation among the Ei terms. Below a
crossover radius the correction is instead taken from its defining integral

    Phi(r) = int_0^r chi0 (k0^2 chi0 - chi0'') ds,

which is free of cancellation in the denominator and agrees with the closed
form whenever eta solves the zeroth-order energy equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import exprel

from qlmriccati.errors import DomainError, NonConvergence
from qlmriccati.grid import RadialFunction, RadialGrid
from qlmriccati.numerics import DEFAULT_QUAD_TOL, QuadratureResult, expint_ei, integrate_cumulative
from qlmriccati.potential import Family, PotentialSpec, evaluate
from qlmriccati.zeroth_iteration import COULOMB_DELTA, GuessParams, chi0, log_chi0, u0

# Grid used for E1; the second, finer grid gives the error estimate.
_BASE_PANEL_WIDTH = 0.5
_PANEL_ORDER = 16


def _check_spec(spec: PotentialSpec):
    if spec.family is Family.CUSTOM:
        raise DomainError("the closed-form first iteration exists only for Yukawa/Coulomb")


def _is_coulomb(p: GuessParams) -> bool:
    return p.delta < COULOMB_DELTA


def phi_unnormalized(p: GuessParams, spec: PotentialSpec, r):
    """Phi for chi0 = e^{-eta r} - e^{-a r} (N = 1)."""
    mu, eta, lam = p.mu, p.eta, spec.screening
    a = p.a
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("Phi is evaluated at r > 0")
    out = 2.0 * mu * np.asarray(
        (eta / mu - 1.0) * np.exp(-2.0 * mu * r)
        + (mu - eta) / a * np.exp(-2.0 * r * a)
        + 2.0 * expint_ei(-r * (2.0 * mu + lam))
        - expint_ei(-r * (2.0 * eta + lam))
        - expint_ei(-r * (4.0 * mu - 2.0 * eta + lam))
    )
    return out if out.ndim else float(out)


def phi(p: GuessParams, spec: PotentialSpec, r):
    """Closed-form Phi(r), scaled by N^2 to pair with the normalized chi0.

    Identically zero in the Coulomb limit, where the guess is exact.
    """
    _check_spec(spec)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("Phi is evaluated at r > 0")
    if _is_coulomb(p):
        out = np.zeros_like(r)
    else:
        out = p.N**2 * np.asarray(phi_unnormalized(p, spec, r))
    return out if out.ndim else float(out)


def _phi_integrand(p: GuessParams, lam: float):
    # chi0 (k0^2 chi0 - chi0''), rewritten with e^{-eta s} - e^{-a s} = 2 delta s e^{-eta s} exprel(-2 delta s)
    # so that no inverse power of delta survives.
    mu, eta, a, delta = p.mu, p.eta, p.a, p.delta

    def f(s):
        ex = exprel(-2.0 * delta * s)
        bracket = np.exp(-a * s) - np.exp(-(lam + eta) * s) * ex
        return 8.0 * mu**2 * eta * a * s * np.exp(-eta * s) * ex * bracket

    return f


def _crossover(p: GuessParams) -> float:
    return min(max(0.5, 0.05 / p.delta), 10.0) / p.mu


def correction(p: GuessParams, spec: PotentialSpec, r):
    """Phi(r)/chi0(r)^2, the first-iteration change of the log-derivative."""
    _check_spec(spec)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("y1 is evaluated at r > 0")
    out = np.zeros_like(r)
    if not _is_coulomb(p):
        rc = _crossover(p)
        near = r < rc
        if np.any(~near):
            rf = r[~near]
            # N cancels: use the unnormalized pair directly
            denom = (2.0 * p.delta * rf * np.exp(-p.eta * rf) * exprel(-2.0 * p.delta * rf)) ** 2
            out[~near] = phi_unnormalized(p, spec, rf) / denom
        if np.any(near):
            rn = r[near]
            integral = integrate_cumulative(_phi_integrand(p, spec.screening), rn, order=20, max_step=0.25)
            out[near] = integral / chi0(p, rn) ** 2
    return out if out.ndim else float(out)


def u1(p: GuessParams, spec: PotentialSpec, r):
    """y1(r) - 1/r, finite at the origin."""
    out = u0(p, r) + correction(p, spec, r)
    return out


def y1(p: GuessParams, spec: PotentialSpec, r):
    """First-iteration logarithmic derivative y1 = y0 + Phi/chi0^2."""
    r = np.asarray(r, dtype=float)
    out = 1.0 / r + u1(p, spec, r)
    return out if out.ndim else float(out)


def chi1_log(p: GuessParams, spec: PotentialSpec, r):
    """ln chi1(r) = ln chi0(r) + int_0^r Phi/chi0^2, up to an additive constant."""
    r = np.asarray(r, dtype=float)
    if _is_coulomb(p):
        out = log_chi0(p, r)
    else:
        out = log_chi0(p, r) + integrate_cumulative(lambda t: correction(p, spec, t), r, order=20, max_step=0.25)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True, eq=False)
class FirstIterResult:
    """First-iteration energy and wave function.

    Attributes:
        E1: Rayleigh-quotient energy of chi1 (Hartree).
        y1_fn: r -> y1(r).
        chi1_log_fn: r -> ln chi1(r) (same additive constant as ``log_chi1``).
        quadrature_diag: E1 value with the fine/coarse grid difference as error.
        log_chi1: ln chi1 sampled on the energy grid, shifted so that
            int chi1^2 = 1.
        u1: y1 - 1/r on the energy grid.
    """

    E1: float
    y1_fn: Callable
    chi1_log_fn: Callable
    quadrature_diag: QuadratureResult
    log_chi1: RadialFunction = field(repr=False)
    u1: RadialFunction = field(repr=False)
    log_norm: float = 0.0

    def chi1(self, r):
        """Unit-normalized chi1 at arbitrary r >= 0 (0 at the origin)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0
        out[pos] = np.exp(self.chi1_log_fn(r[pos]) - self.log_norm)
        return out if out.ndim else float(out)


def _energy_on_grid(p: GuessParams, spec: PotentialSpec, grid: RadialGrid):
    r = grid.points
    corr = correction(p, spec, r)
    u = u0(p, r) + corr
    logc = log_chi0(p, r) + grid.cumulative(corr)
    shift = logc.max()
    w = np.exp(2.0 * (logc - shift))
    yv = 1.0 / r + u
    num = grid.integrate(w * (yv * yv / (2.0 * spec.m) + evaluate(spec, r)))
    den = grid.integrate(w)
    log_norm = shift + 0.5 * math.log(den)
    return num / den, u, logc, log_norm


def default_rmax(eta: float) -> float:
    return 40.0 / eta


def energy_first(p: GuessParams, spec: PotentialSpec, tol: float = DEFAULT_QUAD_TOL,
                 r_max: float | None = None) -> FirstIterResult:
    """E1 = int chi1^2 [y1^2/(2m) + U] / int chi1^2.

    Evaluated on composite Gauss-Legendre grids of decreasing panel width
    until two successive values agree to ``tol``.

    Raises:
        NonConvergence: If refinement does not reach ``tol``.
    """
    _check_spec(spec)
    if not tol > 0:
        raise DomainError("tol must be positive")
    r_max = default_rmax(p.eta) if r_max is None else r_max
    width = _BASE_PANEL_WIDTH / p.mu
    prev = None
    evaluations = 0
    for _ in range(6):
        grid = RadialGrid.gauss(r_max, panel_width=width, order=_PANEL_ORDER)
        E, u, logc, log_norm = _energy_on_grid(p, spec, grid)
        evaluations += grid.size
        if prev is not None and abs(E - prev) <= tol:
            break
        prev = E
        width *= 0.5
    else:
        raise NonConvergence(f"E1 quadrature did not settle to {tol:.1e}")
    err = abs(E - prev)
    # ln chi1 at arbitrary r shares the grid's additive constant: both start from ln chi0
    return FirstIterResult(
        E1=E,
        y1_fn=lambda r: y1(p, spec, r),
        chi1_log_fn=lambda r: chi1_log(p, spec, r),
        quadrature_diag=QuadratureResult(E, err, evaluations),
        log_chi1=RadialFunction(grid, logc - log_norm, "log_chi"),
        u1=RadialFunction(grid, u, "u"),
        log_norm=log_norm,
    )
