"""Analytic zeroth-order guess for the Yukawa ground state.

The guess chi0(r) = N [e^{-eta r} - e^{-a r}] has the exact asymptotic decay
e^{-eta r} and satisfies the cusp (Kato) condition at the origin through
a = 2 mu - eta. Its Rayleigh quotient is known in closed form; requiring that
energy to equal -eta^2/(2m) fixes eta.

All formulas are written in terms of delta = mu - eta so that the Coulomb
limit delta -> 0 is evaluated without 0/0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exprel

from qlmriccati.errors import DomainError, NoBoundState, NoSignChange
from qlmriccati.numerics import DEFAULT_ROOT_TOL, coth_minus_inverse, find_root_bracketed
from qlmriccati.potential import Family, PotentialSpec

COULOMB_DELTA = 1e-7


@dataclass(frozen=True)
class GuessParams:
    """Zeroth-iteration parameters.

    Attributes:
        eta: Asymptotic decay rate (1/Bohr).
        mu: m g (1/Bohr).
        a: Secondary decay rate, 2 mu - eta.
        N: Normalization factor (``inf`` in the exact Coulomb limit, where
            only the product N (a - eta) is finite).
        E0: Zeroth-order energy -eta^2/(2m) (Hartree).
        m: Mass.
        residual: |E0 functional + eta^2/(2m)| at the solved eta.
    """

    eta: float
    mu: float
    a: float
    N: float
    E0: float
    m: float = 1.0
    residual: float = 0.0

    @property
    def delta(self) -> float:
        return self.mu - self.eta

    @property
    def amplitude(self) -> float:
        """sqrt(mu eta a); chi0 = 2 amplitude e^{-eta r} (1 - e^{-2 delta r})/(2 delta)."""
        return math.sqrt(self.mu * self.eta * self.a)


def make_params(eta: float, mu: float, m: float = 1.0, residual: float = 0.0) -> GuessParams:
    """GuessParams for an arbitrary eta in (0, mu]."""
    if not 0 < eta <= mu:
        raise DomainError(f"need 0 < eta <= mu, got eta={eta!r}, mu={mu!r}")
    a = 2.0 * mu - eta
    delta = mu - eta
    N = math.sqrt(mu * eta * a) / delta if delta > 0 else math.inf
    return GuessParams(eta=eta, mu=mu, a=a, N=N, E0=-eta * eta / (2.0 * m), m=m, residual=residual)


def coulomb_limit_energy(spec: PotentialSpec) -> float:
    """Exact hydrogenic ground-state energy -mu^2/(2m)."""
    return -spec.mu**2 / (2.0 * spec.m)


def zeroth_energy_functional(eta: float, spec: PotentialSpec) -> float:
    """Rayleigh quotient of chi0 for the Yukawa potential, as a function of eta.

    (mu eta (2mu - eta)/m) [1/(2mu) + mu/(mu-eta)^2 ln((4mu-2eta+lam)(2eta+lam)/(2mu+lam)^2)]

    The log argument equals 1 - 4 delta^2/B^2 with B = 2mu + lam, so the
    bracket is evaluated as 1/(2mu) - (4mu/B^2) log1p(x)/x, x = -4 delta^2/B^2,
    which is exact algebra and smooth through eta = mu.
    """
    mu, lam, m = spec.mu, spec.screening, spec.m
    if not 0 < eta < 2 * mu:
        raise DomainError(f"eta={eta!r} outside (0, 2 mu)")
    A = 4 * mu - 2 * eta + lam
    C = 2 * eta + lam
    if A <= 0 or C <= 0:
        raise DomainError("logarithm argument is not positive")
    B = 2 * mu + lam
    x = -4.0 * (mu - eta) ** 2 / (B * B)
    log_ratio = 1.0 if x == 0 else math.log1p(x) / x
    return (mu * eta * (2 * mu - eta) / m) * (1.0 / (2 * mu) - (4.0 * mu / (B * B)) * log_ratio)


def _eta_residual(eta: float, spec: PotentialSpec) -> float:
    return zeroth_energy_functional(eta, spec) + eta * eta / (2.0 * spec.m)


def solve_eta(spec: PotentialSpec, tol: float = DEFAULT_ROOT_TOL) -> GuessParams:
    """Solve E0(eta) = -eta^2/(2m) for the decay rate eta in (0, mu).

    The interval is scanned on a grid that is geometric both towards 0 and
    towards mu; the largest sign change (deepest binding) is refined with
    Brent's method.

    Raises:
        DomainError: For non-Yukawa/Coulomb potentials.
        NoBoundState: If the residual never changes sign, i.e. the screening
            is at or beyond the zeroth-order critical value.
    """
    if spec.family is Family.CUSTOM:
        raise DomainError("the analytic guess is defined only for Yukawa/Coulomb potentials")
    mu = spec.mu
    if spec.screening == 0.0:
        return make_params(mu, mu, spec.m)

    lo, hi = 1e-6 * mu, mu * (1 - 1e-9)
    near_zero = np.geomspace(lo, 0.5 * mu, 200)
    near_mu = mu - np.geomspace(0.5 * mu, mu - hi, 200)
    scan = np.unique(np.concatenate([near_zero, near_mu]))
    vals = np.array([_eta_residual(e, spec) for e in scan])
    flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    exact = np.nonzero(vals == 0.0)[0]
    if exact.size and (not flips.size or scan[exact[-1]] > scan[flips[-1] + 1]):
        eta = float(scan[exact[-1]])
        return make_params(eta, mu, spec.m)
    if not flips.size:
        raise NoBoundState(
            f"no zeroth-order bound state for {spec.describe()} "
            "(screening at or beyond the critical value)"
        )
    i = flips[-1]
    try:
        root = find_root_bracketed(lambda e: _eta_residual(e, spec), scan[i], scan[i + 1], tol=tol)
    except NoSignChange as exc:  # pragma: no cover - scan guarantees a flip
        raise NoBoundState(str(exc)) from exc
    return make_params(root.root, mu, spec.m, residual=abs(root.residual))


def chi0(p: GuessParams, r):
    """N [e^{-eta r} - e^{-a r}], evaluated as 2 sqrt(mu eta a) e^{-eta r} r exprel(-2 delta r)."""
    r = np.asarray(r, dtype=float)
    out = 2.0 * p.amplitude * np.exp(-p.eta * r) * r * exprel(-2.0 * p.delta * r)
    return out if out.ndim else float(out)


def log_chi0(p: GuessParams, r):
    """ln chi0(r) for r > 0, without underflow at large r."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("ln chi0 needs r > 0")
    out = math.log(2.0 * p.amplitude) - p.eta * r + np.log(r) + np.log(exprel(-2.0 * p.delta * r))
    return out if out.ndim else float(out)


def u0(p: GuessParams, r):
    """y0(r) - 1/r = -mu + delta [coth(delta r) - 1/(delta r)], finite at r = 0."""
    r = np.asarray(r, dtype=float)
    if p.delta == 0.0:
        out = np.full_like(r, -p.mu)
    else:
        out = np.asarray(-p.mu + p.delta * coth_minus_inverse(p.delta * r))
    return out if out.ndim else float(out)


def y0(p: GuessParams, r):
    """Logarithmic derivative of chi0: -mu + (mu - eta) coth((mu - eta) r).

    Raises:
        DomainError: At r <= 0, where y0 ~ 1/r.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("y0 is singular at r = 0")
    out = 1.0 / r + u0(p, r)
    return out if out.ndim else float(out)
