"""Grid-based QLM iteration for an arbitrary potential.

Iterates are stored as u = y - 1/r, which is finite at the origin for any
potential with at most a Coulomb singularity. With chi^2 = r^2 exp(2 int u),
one QLM step is

    u_{n+1}(r) = (1/chi_n^2(r)) int_0^r chi_n^2 (u_n^2 + k_n^2) ds,

the u-form of y_{n+1} = (1/chi_n^2) int_0^r chi_n^2 (y_n^2 + k_n^2) ds.
The full integral over [0, inf) vanishes exactly when E_n is the Rayleigh
quotient of chi_n, so beyond the maximum of chi_n the same quantity is
computed from the tail, -(1/chi_n^2) int_r^inf, which avoids dividing a
roundoff-sized remainder by an exponentially small chi_n^2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from qlmriccati.errors import DomainError, MaxIterExceeded, NonConvergence, NonFinite
from qlmriccati.grid import RadialFunction, RadialGrid, build_grid
from qlmriccati.potential import PotentialSpec, evaluate, local_wavenumber_sq
from qlmriccati.zeroth_iteration import GuessParams, u0

logger = logging.getLogger(__name__)

# chi^2 at r_max relative to its peak above which the input is treated as non-normalizable
_TAIL_RATIO = 1e-12
ENERGY_UPDATES = ("rayleigh", "frozen")
# tail beyond r_max: integration-by-parts terms and the fit used for their derivatives
_TAIL_TERMS = 6
_TAIL_FIT_SPAN = 1.0
_TAIL_FIT_DEGREE = 6


@dataclass(frozen=True)
class QLMConfig:
    """Iteration controls.

    ``energy_update="frozen"`` keeps E_guess in k^2 for every step instead of
    the Rayleigh quotient of the current iterate (experimental; the step is
    then not regular at both ends and usually converges to the wrong energy).
    """

    max_iter: int = 20
    tol: float = 1e-10
    energy_update: str = "rayleigh"

    def __post_init__(self):
        if self.energy_update not in ENERGY_UPDATES:
            raise DomainError(f"energy_update must be one of {ENERGY_UPDATES}")
        if self.max_iter < 1 or not self.tol > 0:
            raise DomainError("need max_iter >= 1 and tol > 0")


@dataclass(frozen=True, eq=False)
class IterationRecord:
    n: int
    E: float
    u: RadialFunction = field(repr=False)
    delta_E: float
    residual_norm: float


def default_grid(eta_estimate: float, spacing: str = "gauss", n_points: int | None = None,
                 r_max: float | None = None, mu: float = 1.0) -> RadialGrid:
    """Grid reaching 40 decay lengths; Gauss panels 0.25/mu wide by default."""
    r_max = 40.0 / eta_estimate if r_max is None else r_max
    if spacing == "gauss" and n_points is None:
        return RadialGrid.gauss(r_max, panel_width=0.25 / mu)
    return build_grid(spacing, r_max, n_points)


def yukawa_guess(p: GuessParams, grid: RadialGrid) -> RadialFunction:
    """u0 = y0 - 1/r of the analytic zeroth-order guess, sampled on ``grid``."""
    return RadialFunction(grid, u0(p, grid.points), "u")


def _log_chi_sq(u: RadialFunction) -> np.ndarray:
    g = u.grid
    with np.errstate(over="ignore", invalid="ignore"):
        out = 2.0 * np.log(g.points) + 2.0 * g.cumulative(u.values)
    if not np.all(np.isfinite(out)):
        raise NonFinite("cumulative exponent of chi^2 is not finite")
    return out


def _weights(u: RadialFunction):
    log_w = _log_chi_sq(u)
    peak = int(np.argmax(log_w))
    w = np.exp(log_w - log_w[peak])
    return w, peak


def energy_rayleigh(u: RadialFunction, spec: PotentialSpec, grid: RadialGrid | None = None) -> float:
    """Rayleigh quotient <chi|H|chi>/<chi|chi> for chi^2 = r^2 exp(2 int u).

    Uses int chi^2 [u^2/(2m) + U] / int chi^2, equal to the usual
    int chi^2 [y^2/(2m) + U] form because chi^2 (y^2 - u^2) = d/dr (r e^{2 int u})
    integrates to zero.

    Raises:
        NonConvergence: If chi^2 has not decayed at the end of the grid (the
            input is not normalizable).
        NonFinite: On overflow.
    """
    if grid is not None and grid is not u.grid:
        u = RadialFunction(grid, u(grid.points), u.kind)
    if not np.all(np.isfinite(u.values)):
        raise NonFinite("u has non-finite samples")
    w, peak = _weights(u)
    if w[-1] > _TAIL_RATIO:
        raise NonConvergence(
            f"chi^2 at r_max is {w[-1]:.2e} of its peak: not normalizable on this grid"
        )
    r = u.grid.points
    num = u.grid.integrate(w * (u.values**2 / (2.0 * spec.m) + evaluate(spec, r)))
    den = u.grid.integrate(w)
    return num / den


def _tail_factor(r, source, kappa, terms: int = _TAIL_TERMS) -> float:
    """int_{r_M}^inf e^{-2 int_{r_M}^s kappa} source ds, kappa = -y > 0.

    Repeated integration by parts gives sum_j D^j [source/(2 kappa)] at r_M
    with D = (1/(2 kappa)) d/dr. The derivatives come from low-degree least
    squares fits over the last stretch of the grid; differentiating the grid
    samples directly amplifies rounding noise by ~order^2/width per term.
    Returns NaN when kappa is not positive there.
    """
    sel = r >= r[-1] - _TAIL_FIT_SPAN
    if np.count_nonzero(sel) < _TAIL_FIT_DEGREE + 4:
        sel = np.arange(r.size) >= r.size - (_TAIL_FIT_DEGREE + 4)
    if not np.all(kappa[sel] > 0):
        return math.nan
    x = r[sel] - r[-1]
    term = Polynomial.fit(x, source[sel] / (2.0 * kappa[sel]), _TAIL_FIT_DEGREE)
    half_inv = Polynomial.fit(x, 0.5 / kappa[sel], _TAIL_FIT_DEGREE)
    total = term(0.0)
    for _ in range(terms):
        term = term.deriv() * half_inv
        total += term(0.0)
    return float(total)


def qlm_step(u: RadialFunction, E: float, spec: PotentialSpec, grid: RadialGrid | None = None) -> RadialFunction:
    """One QLM step u_n -> u_{n+1} with k_n^2 evaluated at energy ``E``.

    Raises:
        DomainError: If ``E >= 0``.
        NonFinite: If the iterate overflows.
    """
    if not E < 0:
        raise DomainError("bound-state QLM step needs E < 0")
    if grid is not None and grid is not u.grid:
        u = RadialFunction(grid, u(grid.points), u.kind)
    g = u.grid
    r = g.points
    if not np.all(np.isfinite(u.values)):
        raise NonFinite("u has non-finite samples")
    w, peak = _weights(u)
    source = u.values**2 + local_wavenumber_sq(spec, E, r)
    q = w * source
    fwd = g.cumulative(q)
    bwd = g.cumulative(q, reverse=True)
    kappa = -(u.values + 1.0 / r)
    tail = _tail_factor(r, source, kappa)
    if np.isfinite(tail):
        # the series is anchored at the last node, so drop [r_M, r_max] from bwd
        bwd = bwd - bwd[-1] + w[-1] * tail
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        new = np.where(np.arange(r.size) <= peak, fwd / w, -bwd / w)
    if not np.all(np.isfinite(new)):
        raise NonFinite("QLM step produced non-finite values")
    return RadialFunction(g, new, "u")


def riccati_residual(u: RadialFunction, E: float, spec: PotentialSpec) -> np.ndarray:
    """y' + y^2 - k^2 written for u: u' + 2u/r + u^2 - k^2(E)."""
    r = u.grid.points
    du = u.grid.derivative(u.values)
    return du + 2.0 * u.values / r + u.values**2 - local_wavenumber_sq(spec, E, r)


def _residual_norm(u: RadialFunction, E: float, spec: PotentialSpec) -> float:
    # only where chi carries weight; deep in the tail the residual is roundoff amplification
    w, _ = _weights(u)
    res = riccati_residual(u, E, spec)
    mask = w > 1e-20
    return float(np.max(np.abs(res[mask])))


def solve(spec: PotentialSpec, guess: RadialFunction, E_guess: float,
          config: QLMConfig | None = None) -> list[IterationRecord]:
    """Iterate QLM steps and Rayleigh energies until |E_{n+1} - E_n| <= tol.

    Returns:
        All iteration records, starting with n = 0 for the guess.

    Raises:
        MaxIterExceeded: With the partial history in ``.history``.
        NonFinite: If an iterate overflows.
    """
    config = config or QLMConfig()
    if not E_guess < 0:
        raise DomainError("E_guess must be negative")
    u = guess
    E = energy_rayleigh(u, spec)
    records = [IterationRecord(0, E, u, math.nan, _residual_norm(u, E, spec))]
    for n in range(1, config.max_iter + 1):
        E_k = E if config.energy_update == "rayleigh" else E_guess
        u = qlm_step(u, E_k, spec)
        E_new = energy_rayleigh(u, spec)
        rec = IterationRecord(n, E_new, u, abs(E_new - E), _residual_norm(u, E_new, spec))
        if rec.residual_norm > records[-1].residual_norm and records[-1].residual_norm > 1e-9:
            logger.warning("Riccati residual grew at n=%d: %.3e -> %.3e", n,
                           records[-1].residual_norm, rec.residual_norm)
        records.append(rec)
        logger.debug("n=%d E=%.15g dE=%.3e res=%.3e", n, E_new, rec.delta_E, rec.residual_norm)
        E = E_new
        if rec.delta_E <= config.tol:
            return records
    raise MaxIterExceeded(f"no convergence to {config.tol:.1e} in {config.max_iter} iterations", records)


def convergence_order(errors) -> tuple[float, float]:
    """Fit e_{n+1} ~ C e_n^p to a sequence of positive errors.

    With three or more errors the slope of log e_{n+1} against log e_n is
    fitted by least squares. With exactly two, C is taken as 1 and
    p = log e_1 / log e_0. Returns ``(p, C)``.
    """
    e = np.asarray(errors, dtype=float)
    if e.size < 2 or np.any(e <= 0):
        raise DomainError("need at least two positive errors")
    x, y = np.log(e[:-1]), np.log(e[1:])
    if e.size == 2:
        return float(y[0] / x[0]), 1.0
    p, logC = np.polyfit(x, y, 1)
    return float(p), float(math.exp(logC))
