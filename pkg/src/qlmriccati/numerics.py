"""Numerical backbone: adaptive quadrature, bracketed roots, Ei and coth.

Everything here is a pure function of its arguments. The special functions
accept scalars or numpy arrays and return the same shape.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from qlmriccati.errors import DomainError, NoSignChange, NonConvergence, NonFiniteSample

EULER_GAMMA = 0.57721566490153286060651209008240243

DEFAULT_QUAD_TOL = 1e-11
DEFAULT_ROOT_TOL = 1e-12

# Ei(x), x < 0: power series for |x| <= EI_CROSSOVER, Lentz continued fraction beyond.
# The series is alternating in |x| and loses ~e^{|x|}/|Ei(x)| digits, so the
# crossover sits at 1 rather than further out.
EI_CROSSOVER = 1.0
COTH_SERIES_CROSSOVER = 1e-4
COTH_SATURATION = 20.0
_COTHM_CROSSOVER = 0.1

# Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES15 = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_WK15 = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[1:7:2] = _WG[:3]
_WG15[7] = _WG[3]
_WG15[9:15:2] = _WG[2::-1]


@dataclass(frozen=True)
class QuadratureResult:
    """Value of a definite integral with its absolute error estimate."""

    value: float
    error_estimate: float
    evaluations: int


@dataclass(frozen=True)
class RootResult:
    root: float
    residual: float
    bracket_width: float
    iterations: int = 0


def _eval_vectorized(f: Callable, x: np.ndarray) -> np.ndarray:
    try:
        y = np.asarray(f(x), dtype=float)
        if y.shape != x.shape:
            y = np.broadcast_to(y, x.shape).astype(float)
    except (TypeError, ValueError):
        y = np.array([float(f(float(t))) for t in x])
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise NonFiniteSample(f"integrand is not finite at x={bad!r}")
    return y


def _gk15(f, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c + h * _NODES15
    y = _eval_vectorized(f, x)
    kron = h * float(np.dot(_WK15, y))
    gauss = h * float(np.dot(_WG15, y))
    mean = kron / (2.0 * h) if h else 0.0
    resasc = abs(h) * float(np.dot(_WK15, np.abs(y - mean)))
    err = abs(kron - gauss)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    # Floor at roundoff level of the panel.
    resabs = abs(h) * float(np.dot(_WK15, np.abs(y)))
    err = max(err, 50.0 * np.finfo(float).eps * resabs)
    return kron, err


def integrate_adaptive(
    f: Callable,
    a: float,
    b: float,
    tol: float = DEFAULT_QUAD_TOL,
    max_intervals: int = 4000,
) -> QuadratureResult:
    """Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.

    The interval with the largest error estimate is bisected until the summed
    estimate drops below ``max(tol, tol * |value|)``.

    Args:
        f: Integrand. Called with a numpy array of 15 abscissae when it
            supports that, otherwise point by point.
        a: Lower limit.
        b: Upper limit, ``b > a``.
        tol: Absolute (and relative) tolerance.
        max_intervals: Subdivision limit.

    Returns:
        QuadratureResult.

    Raises:
        DomainError: On an empty or non-finite interval or ``tol <= 0``.
        NonConvergence: If the subdivision limit is reached first.
        NonFiniteSample: If ``f`` returns inf or nan.
    """
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise DomainError(f"need finite a < b, got a={a!r}, b={b!r}")
    if not tol > 0:
        raise DomainError("tol must be positive")

    value, err = _gk15(f, a, b)
    evaluations = 15
    # max-heap on error
    heap = [(-err, a, b, value)]
    total, total_err = value, err
    while total_err > max(tol, tol * abs(total)):
        if len(heap) >= max_intervals:
            raise NonConvergence(
                f"adaptive quadrature hit {max_intervals} intervals "
                f"(error estimate {total_err:.3e}, tol {tol:.3e})"
            )
        neg_err, lo, hi, val = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            raise NonConvergence("interval collapsed below floating-point resolution")
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        evaluations += 30
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        # Resum from the heap to avoid drift from repeated add/subtract.
        total = math.fsum(item[3] for item in heap)
        total_err = math.fsum(-item[0] for item in heap)
    return QuadratureResult(total, total_err, evaluations)


def integrate_semi_infinite(
    f: Callable,
    a: float,
    tol: float = DEFAULT_QUAD_TOL,
    decay_scale: float = 1.0,
) -> QuadratureResult:
    """Integrate ``f`` over ``[a, inf)`` for an exponentially decaying integrand.

    The range is truncated at ``a + 40/decay_scale``. If the neglected tail,
    bounded by ``|f(b)|/decay_scale``, still exceeds ``tol`` the cut is pushed
    out by the same amount until it does not.

    Args:
        decay_scale: Slowest exponential decay rate of ``f`` (``f ~ e^{-decay_scale x}``).
    """
    if not decay_scale > 0:
        raise DomainError("decay_scale must be positive")
    span = 40.0 / decay_scale
    b = a + span
    for _ in range(50):
        tail = abs(float(_eval_vectorized(f, np.array([b]))[0])) / decay_scale
        if tail < 0.1 * tol:
            break
        b += span
    else:
        raise NonConvergence("integrand tail does not decay at the declared rate")
    res = integrate_adaptive(f, a, b, tol=tol)
    return QuadratureResult(res.value, res.error_estimate + tail, res.evaluations + 1)


def integrate_cumulative(
    f: Callable,
    x,
    lower: float = 0.0,
    order: int = 20,
    max_step: float = 0.25,
) -> np.ndarray:
    """Return ``int_lower^{x_i} f`` for every entry of ``x``.

    Gauss-Legendre of fixed ``order`` on every gap between consecutive sorted
    points, gaps split so no piece is wider than ``max_step``. ``f`` must be
    vectorized and smooth; it is never sampled at the endpoints themselves.
    """
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if flat.size == 0:
        return np.zeros_like(x)
    if np.any(flat < lower):
        raise DomainError("all upper limits must be >= lower")
    order_idx = np.argsort(flat, kind="stable")
    pts = np.concatenate([[lower], flat[order_idx]])
    gaps = np.diff(pts)
    nsub = np.maximum(1, np.ceil(gaps / max_step).astype(int))
    # sub-interval edges
    owner = np.repeat(np.arange(gaps.size), nsub)
    within = np.arange(owner.size) - np.repeat(np.cumsum(nsub) - nsub, nsub)
    left = pts[owner] + gaps[owner] * within / nsub[owner]
    width = gaps[owner] / nsub[owner]
    t, w = np.polynomial.legendre.leggauss(order)
    nodes = left[:, None] + 0.5 * width[:, None] * (t[None, :] + 1.0)
    vals = _eval_vectorized(f, nodes.ravel()).reshape(nodes.shape)
    piece = 0.5 * width * (vals @ w)
    per_gap = np.zeros(gaps.size)
    np.add.at(per_gap, owner, piece)
    cum = np.cumsum(per_gap)
    out = np.empty_like(flat)
    out[order_idx] = cum
    return out.reshape(x.shape)


def find_root_bracketed(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = DEFAULT_ROOT_TOL,
    maxiter: int = 200,
) -> RootResult:
    """Brent's method (bisection + secant + inverse quadratic interpolation).

    The returned root is one end of a bracket ``[root, other]`` across which
    ``f`` changes sign, and ``|root - other| <= tol`` unless ``tol`` is below
    a few ulps of the root, in which case the width is the floating-point limit.

    Raises:
        NoSignChange: If ``f(lo) * f(hi) >= 0`` and neither end is a root.
        NonConvergence: If ``maxiter`` iterations do not suffice.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    a, b = float(lo), float(hi)
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return RootResult(a, 0.0, 0.0)
    if fb == 0.0:
        return RootResult(b, 0.0, 0.0)
    if not (math.isfinite(fa) and math.isfinite(fb)) or fa * fb > 0:
        raise NoSignChange(f"f({a!r})={fa!r} and f({b!r})={fb!r} do not bracket a root")

    c, fc = a, fa
    d = e = b - a
    eps = np.finfo(float).eps
    for it in range(1, maxiter + 1):
        if fb * fc > 0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = max(0.5 * tol, 2.0 * eps * abs(b))
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return RootResult(b, fb, abs(c - b), it)
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = xm
        else:
            d = e = xm
        a, fa = b, fb
        b += d if abs(d) > tol1 else math.copysign(tol1, xm)
        fb = float(f(b))
        if not math.isfinite(fb):
            raise NonConvergence(f"f returned {fb!r} at {b!r}")
    raise NonConvergence(f"Brent did not converge in {maxiter} iterations")


def _expint_e1_series(z):
    # E1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!),   0 < z <= 1
    total = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(1, 30):
        term = term * (-z) / k
        total += term / k
    return -EULER_GAMMA - np.log(z) - total


def _expint_e1_cf(z):
    # Modified Lentz evaluation of E1(z) e^{z} = 1/(z+1- 1/(z+3- 4/(z+5- ...))), z > 1
    tiny = 1e-300
    b = z + 1.0
    c = np.full_like(z, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(z.shape, dtype=bool)
    for i in range(1, 1000):
        an = -float(i * i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        # converged entries are frozen so they stop accumulating rounding
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) >= 1e-16
        if not active.any():
            break
    return h * np.exp(-z)


def expint_ei(x):
    """Exponential integral Ei(x) = -int_{-x}^inf e^{-t}/t dt for x < 0.

    Series for ``|x| <= 1``, continued fraction above. Relative accuracy is
    ~1e-15 over ``[-700, -1e-300]``; below -745 the result underflows to -0.0.

    Raises:
        DomainError: If any ``x >= 0`` (or nan).
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(arr < 0):
        raise DomainError("expint_ei is defined here only for x < 0")
    z = -arr
    out = np.empty_like(z)
    small = z <= EI_CROSSOVER
    if np.any(small):
        out[small] = -_expint_e1_series(z[small])
    if np.any(~small):
        out[~small] = -_expint_e1_cf(z[~small])
    return out if out.ndim else float(out)


def coth_stable(x):
    """coth(x) without overflow for large |x| and without cancellation near 0.

    Raises:
        DomainError: At ``x == 0``.
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr == 0):
        raise DomainError("coth is singular at 0")
    ax = np.abs(arr)
    out = np.empty_like(arr)
    small = ax < COTH_SERIES_CROSSOVER
    big = ax > COTH_SATURATION
    mid = ~(small | big)
    xs = arr[small]
    out[small] = 1.0 / xs + xs / 3.0 - xs**3 / 45.0
    out[big] = np.sign(arr[big])
    out[mid] = 1.0 / np.tanh(arr[mid])
    return out if out.ndim else float(out)


# coth(x) - 1/x = sum_{n>=1} 2^{2n} B_{2n} x^{2n-1} / (2n)!
_COTHM_COEFFS = (
    1.0 / 3.0,
    -1.0 / 45.0,
    2.0 / 945.0,
    -1.0 / 4725.0,
    2.0 / 93555.0,
    -1382.0 / 638512875.0,
    4.0 / 18243225.0,
)


def coth_minus_inverse(x):
    """coth(x) - 1/x, finite and odd through x = 0."""
    arr = np.asarray(x, dtype=float)
    out = np.empty_like(arr)
    small = np.abs(arr) < _COTHM_CROSSOVER
    xs = arr[small]
    x2 = xs * xs
    acc = np.zeros_like(xs)
    for coeff in reversed(_COTHM_COEFFS):
        acc = acc * x2 + coeff
    out[small] = acc * xs
    xb = arr[~small]
    out[~small] = coth_stable(xb) - 1.0 / xb
    return out if out.ndim else float(out)
