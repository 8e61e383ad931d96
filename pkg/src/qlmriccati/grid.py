"""Radial grids with cumulative quadrature, and functions sampled on them.

Three layouts are supported:

* ``gauss`` (default): composite Gauss-Legendre panels on ``[0, r_max]``.
  Cumulative integrals, derivatives and interpolation are spectral within a
  panel. The origin is never a node.
* ``uniform`` / ``log``: plain node sets handled through cubic splines, with
  the first interval's polynomial extrapolated down to ``r = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as L
from scipy.interpolate import CubicSpline, PchipInterpolator

from qlmriccati.errors import DomainError, ExtrapolationError

SPACINGS = ("gauss", "uniform", "log")


@lru_cache(maxsize=16)
def _panel_matrices(order: int):
    x, w = L.leggauss(order)
    V = L.legvander(x, order - 1)
    Vinv = np.linalg.inv(V)
    # A[i, k] = int_{-1}^{x_i} P_k
    A = np.empty((order, order))
    Dv = np.empty((order, order))
    for k in range(order):
        c = np.zeros(order)
        c[k] = 1.0
        A[:, k] = L.legval(x, L.legint(c, lbnd=-1))
        Dv[:, k] = L.legval(x, L.legder(c))
    S = A @ Vinv
    D = Dv @ Vinv
    return x, w, S, D, Vinv


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Ordered radii ``r_1 < ... < r_M`` in Bohr with quadrature machinery.

    Build with :meth:`gauss`, :meth:`uniform` or :meth:`log_uniform`.
    """

    points: np.ndarray
    r_max: float
    spacing: str
    edges: np.ndarray = field(default=None, repr=False)
    order: int = 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 4:
            raise DomainError("a grid needs at least 4 points")
        if not pts[0] > 0 or np.any(np.diff(pts) <= 0):
            raise DomainError("grid points must be positive and strictly increasing")
        if self.spacing not in SPACINGS:
            raise DomainError(f"unknown spacing {self.spacing!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    # -- constructors ---------------------------------------------------
    @classmethod
    def gauss(cls, r_max: float, panel_width: float = 0.5, order: int = 16) -> "RadialGrid":
        n_panels = max(1, math.ceil(r_max / panel_width - 1e-9))
        edges = np.linspace(0.0, r_max, n_panels + 1)
        x = _panel_matrices(order)[0]
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        return cls(pts, float(r_max), "gauss", edges, order)

    @classmethod
    def uniform(cls, r_min: float, r_max: float, n: int) -> "RadialGrid":
        return cls(np.linspace(r_min, r_max, n), float(r_max), "uniform")

    @classmethod
    def log_uniform(cls, r_min: float, r_max: float, n: int) -> "RadialGrid":
        return cls(np.geomspace(r_min, r_max, n), float(r_max), "log")

    @property
    def size(self) -> int:
        return self.points.size

    def metadata(self) -> dict:
        meta = {"spacing": self.spacing, "points": int(self.size), "r_min": float(self.points[0]),
                "r_max": float(self.r_max)}
        if self.spacing == "gauss":
            meta["panels"] = int(self.edges.size - 1)
            meta["order"] = int(self.order)
        return meta

    # -- panel helpers ----------------------------------------------------
    def _panels(self, values):
        return np.asarray(values, dtype=float).reshape(self.edges.size - 1, self.order)

    def _spline(self, values):
        # Cubic through the nodes; its first piece doubles as the [0, r_1] extrapolant.
        return CubicSpline(self.points, values, bc_type="not-a-knot", extrapolate=True)

    def _interval_integrals(self, values):
        """Integrals over [0, r_1], [r_1, r_2], ... for spline grids."""
        sp = self._spline(values)
        c = sp.c  # shape (4, M-1), piece i is sum c[k] (x - x_i)^(3-k)
        h = np.diff(self.points)
        inner = c[0] * h**4 / 4 + c[1] * h**3 / 3 + c[2] * h**2 / 2 + c[3] * h
        t = -self.points[0]
        c0 = c[:, 0]
        # int_{r_1 + t}^{r_1} of piece 0, t = -r_1
        first = -(c0[0] * t**4 / 4 + c0[1] * t**3 / 3 + c0[2] * t**2 / 2 + c0[3] * t)
        return np.concatenate([[first], inner])

    # -- quadrature -------------------------------------------------------
    def integrate(self, values) -> float:
        """int_0^{r_max} f dr from samples of f at the grid points."""
        if self.spacing == "gauss":
            x, w, *_ = _panel_matrices(self.order)
            half = 0.5 * np.diff(self.edges)
            return float(np.sum(half * (self._panels(values) @ w)))
        return float(np.sum(self._interval_integrals(values)))

    def cumulative(self, values, reverse: bool = False) -> np.ndarray:
        """Prefix integrals int_0^{r_i} f, or suffix integrals int_{r_i}^{r_max} f.

        The suffix form is summed directly from the right so a small tail is
        not obtained as a difference of two large numbers.
        """
        if self.spacing == "gauss":
            x, w, S, _, _ = _panel_matrices(self.order)
            half = 0.5 * np.diff(self.edges)
            vals = self._panels(values)
            totals = half * (vals @ w)
            if not reverse:
                local = (vals @ S.T) * half[:, None]
                offset = np.concatenate([[0.0], np.cumsum(totals)[:-1]])
            else:
                local = (vals @ (w[None, :] - S).T) * half[:, None]
                offset = np.concatenate([np.cumsum(totals[::-1])[::-1][1:], [0.0]])
            return (local + offset[:, None]).ravel()
        pieces = self._interval_integrals(values)
        if not reverse:
            return np.cumsum(pieces)
        tail = np.cumsum(pieces[:0:-1])[::-1]
        return np.concatenate([tail, [0.0]])

    def derivative(self, values) -> np.ndarray:
        if self.spacing == "gauss":
            _, _, _, D, _ = _panel_matrices(self.order)
            half = 0.5 * np.diff(self.edges)
            return ((self._panels(values) @ D.T) / half[:, None]).ravel()
        return self._spline(values)(self.points, 1)

    def interpolate(self, values, r):
        """Evaluate the grid function at arbitrary radii in ``[0, r_max]``."""
        r = np.asarray(r, dtype=float)
        if np.any(r < 0) or np.any(r > self.r_max * (1 + 1e-12)):
            raise ExtrapolationError(f"radius outside [0, {self.r_max}]")
        if self.spacing != "gauss":
            if np.any(r < self.points[0]) and self.points[0] > 0:
                # Pchip cannot extrapolate safely; use the cubic near the origin.
                sp = self._spline(values)
                out = PchipInterpolator(self.points, values, extrapolate=True)(r)
                low = r < self.points[0]
                out = np.where(low, sp(r), out)
                return out if out.ndim else float(out)
            out = PchipInterpolator(self.points, values, extrapolate=True)(r)
            return out if out.ndim else float(out)
        _, _, _, _, Vinv = _panel_matrices(self.order)
        coeffs = self._panels(values) @ Vinv.T
        idx = np.clip(np.searchsorted(self.edges, r, side="right") - 1, 0, self.edges.size - 2)
        lo, hi = self.edges[idx], self.edges[idx + 1]
        t = 2.0 * (r - lo) / (hi - lo) - 1.0
        # Legendre recurrence evaluated per point with that point's panel coefficients
        p_prev = np.ones_like(t)
        p_cur = t.copy()
        c = coeffs[idx]
        out = c[..., 0] * p_prev + c[..., 1] * p_cur
        for k in range(1, self.order - 1):
            p_next = ((2 * k + 1) * t * p_cur - k * p_prev) / (k + 1)
            out = out + c[..., k + 1] * p_next
            p_prev, p_cur = p_cur, p_next
        return out if out.ndim else float(out)


def build_grid(spacing: str, r_max: float, n_points: int | None = None, r_min: float = 1e-6) -> RadialGrid:
    """Grid factory used by the CLI.

    For ``gauss`` the point count is rounded up to whole 16-point panels.
    """
    if spacing == "gauss":
        if n_points is None:
            return RadialGrid.gauss(r_max)
        n_panels = max(1, math.ceil(n_points / 16))
        return RadialGrid.gauss(r_max, panel_width=r_max / n_panels)
    n = 2000 if n_points is None else n_points
    if spacing == "uniform":
        return RadialGrid.uniform(r_min, r_max, n)
    if spacing == "log":
        return RadialGrid.log_uniform(r_min, r_max, n)
    raise DomainError(f"unknown grid spacing {spacing!r}")


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """Samples of one radial function on a grid.

    ``kind`` names what is stored, e.g. ``"u"`` (y - 1/r), ``"chi"``,
    ``"log_chi"`` or ``"deviation"``.
    """

    grid: RadialGrid
    values: np.ndarray
    kind: str = "u"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.points.shape:
            raise DomainError("values do not match the grid")
        object.__setattr__(self, "values", vals)

    @property
    def r(self) -> np.ndarray:
        return self.grid.points

    def __call__(self, r):
        return self.grid.interpolate(self.values, r)
