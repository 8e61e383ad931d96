"""Direct ground-state eigensolver: Numerov shooting with two-sided matching.

chi'' = f(r) chi, f = 2m [U(r) - E], is integrated outward from the regular
solution at the origin and inward from the decaying tail, and the two are
matched at the outermost classical turning point. The matching function is
the discrete Wronskian of the two Numerov solutions, which is continuous in E
(no poles) and vanishes exactly at eigenvalues of the Numerov scheme.

Nothing here touches the QLM modules; only the potential and the generic
root finder are shared, so agreement with the QLM energies is a genuine
cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from qlmriccati.errors import DomainError, ExtrapolationError, NoBoundState, NonConvergence, NoSignChange
from qlmriccati.grid import RadialFunction, RadialGrid
from qlmriccati.numerics import find_root_bracketed
from qlmriccati.potential import Family, PotentialSpec, evaluate

DEFAULT_STEP = 2e-3
MIN_STEP = 1.25e-4
_COARSE_STEP = 1e-2
_DECAY_LENGTHS = 40.0
_R_CAP = 2e4


@njit(cache=True)
def _numerov_out(f, h, fchi0, chi1, stop):
    # Y_i = (1 - h^2 f_i / 12) chi_i ;  Y_{i+1} - 2 Y_i + Y_{i-1} = h^2 f_i chi_i
    h2 = h * h
    h12 = h2 / 12.0
    chi = np.zeros(stop + 1)
    chi[1] = chi1
    y_prev = -h12 * fchi0
    y_cur = (1.0 - h12 * f[1]) * chi1
    for i in range(1, stop):
        y_next = 2.0 * y_cur - y_prev + h2 * f[i] * chi[i]
        chi[i + 1] = y_next / (1.0 - h12 * f[i + 1])
        y_prev = y_cur
        y_cur = y_next
    return chi


@njit(cache=True)
def _numerov_in(f, h, start, seed):
    n = f.size - 1
    h2 = h * h
    h12 = h2 / 12.0
    chi = np.zeros(n + 1)
    chi[n - 1] = seed
    y_next = 0.0
    y_cur = (1.0 - h12 * f[n - 1]) * seed
    for i in range(n - 1, start, -1):
        y_prev = 2.0 * y_cur - y_next + h2 * f[i] * chi[i]
        chi[i - 1] = y_prev / (1.0 - h12 * f[i - 1])
        y_next = y_cur
        y_cur = y_prev
        if abs(chi[i - 1]) > 1e250:
            for j in range(i - 1, n):
                chi[j] *= 1e-250
            y_next *= 1e-250
            y_cur *= 1e-250
    return chi


@njit(cache=True)
def _count_nodes_out(f, h, fchi0, chi1):
    h2 = h * h
    h12 = h2 / 12.0
    n = f.size - 1
    c_prev = 0.0
    c_cur = chi1
    y_prev = -h12 * fchi0
    y_cur = (1.0 - h12 * f[1]) * chi1
    nodes = 0
    for i in range(1, n):
        y_next = 2.0 * y_cur - y_prev + h2 * f[i] * c_cur
        c_next = y_next / (1.0 - h12 * f[i + 1])
        if c_next * c_cur < 0.0:
            nodes += 1
        if abs(c_next) > 1e250:
            c_next *= 1e-250
            y_next *= 1e-250
            y_cur *= 1e-250
            c_cur *= 1e-250
        y_prev = y_cur
        y_cur = y_next
        c_prev = c_cur
        c_cur = c_next
    return nodes


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Ground state from the direct solver.

    Attributes:
        E_D: Eigenvalue (Hartree).
        r: Uniform Numerov grid including r = 0.
        chi: Unit-normalized, positive chi on ``r``.
        nodes: Interior nodes of ``chi`` (0 for the ground state).
        match_defect: |log-derivative mismatch| at the matching point.
        h: Step actually used.
        step_difference: |E(h) - E(2h)| from the last halving check.
    """

    E_D: float
    r: np.ndarray = field(repr=False)
    chi: np.ndarray = field(repr=False)
    nodes: int
    match_defect: float
    h: float
    step_difference: float = math.nan

    @property
    def r_max(self) -> float:
        return float(self.r[-1])

    @property
    def chi_D(self) -> RadialFunction:
        grid = RadialGrid.uniform(self.r[1], self.r[-1], self.r.size - 1)
        return RadialFunction(grid, self.chi[1:], "chi")


class _Problem:
    """Numerov discretization of one potential on a fixed uniform grid."""

    def __init__(self, spec: PotentialSpec, h: float, r_max: float):
        self.spec = spec
        self.h = h
        self.n = int(math.ceil(r_max / h))
        self.r = np.arange(self.n + 1) * h
        self.U = np.empty(self.n + 1)
        self.U[0] = np.nan
        self.U[1:] = evaluate(spec, self.r[1:])
        # w(r) = 2m r U(r) is smooth at 0 for potentials no worse than Coulomb
        eps = 1e-7 * h
        w_a = 2.0 * spec.m * eps * evaluate(spec, eps)
        w_b = 2.0 * spec.m * 2 * eps * evaluate(spec, 2 * eps)
        self.w0 = 2 * w_a - w_b
        self.w1 = (w_b - w_a) / eps

    def f(self, E):
        f = 2.0 * self.spec.m * (self.U - E)
        f[0] = 0.0
        return f

    def start(self, E):
        """(f chi)(0) and chi(h) for the regular solution with chi'(0) = 1."""
        h, m = self.h, self.spec.m
        c2 = 0.5 * self.w0
        c3 = (self.w0 * c2 + self.w1 - 2.0 * m * E) / 6.0
        return self.w0, h + c2 * h * h + c3 * h**3

    def matching_index(self, E):
        allowed = np.nonzero(self.U[1:] < E)[0]
        m = allowed[-1] + 1 if allowed.size else self.n // 4
        return int(min(max(m, 3), self.n - 3))

    def shoot(self, E, m):
        f = self.f(E)
        fchi0, chi1 = self.start(E)
        out = _numerov_out(f, self.h, fchi0, chi1, m + 1)
        inn = _numerov_in(f, self.h, m - 1, 1e-200)
        return out, inn

    def wronskian(self, E, m):
        out, inn = self.shoot(E, m)
        scale = np.max(np.abs(out[: m + 2])) * np.max(np.abs(inn[m - 1:]))
        return (out[m] * inn[m + 1] - inn[m] * out[m + 1]) / (self.h * scale)

    def nodes_outward(self, E):
        fchi0, chi1 = self.start(E)
        return _count_nodes_out(self.f(E), self.h, fchi0, chi1)


def _decay_radius(spec: PotentialSpec, E: float) -> float:
    kappa = math.sqrt(-2.0 * spec.m * E)
    return min(_DECAY_LENGTHS / kappa, _R_CAP)


def _bracket_by_nodes(spec: PotentialSpec):
    """Geometric scan then bisection on the outward node count (coarse grid)."""
    h = _COARSE_STEP
    U_min = float(np.min(evaluate(spec, np.arange(1, 2001) * h)))
    e_floor = 2.0 * min(U_min, -1e-6)

    def nodes(E):
        return _Problem(spec, h, _decay_radius(spec, E)).nodes_outward(E)

    lo = e_floor
    if nodes(lo) != 0:
        raise NoBoundState("outward solution already has nodes at the energy floor")
    hi = lo
    while True:
        hi = hi / 4.0
        if hi > -1e-7:
            raise NoBoundState(f"no bound state found for {spec.describe()}")
        if nodes(hi) > 0:
            break
        lo = hi
    while lo / hi > 1.002:
        mid = -math.sqrt(lo * hi)
        if nodes(mid) == 0:
            lo = mid
        else:
            hi = mid
    return 1.02 * lo, 0.98 * hi


def _solve_at_step(spec, h, bracket, tol, r_max):
    lo, hi = bracket
    R = r_max if r_max is not None else _decay_radius(spec, hi)
    prob = _Problem(spec, h, R)
    m = prob.matching_index(0.5 * (lo + hi))
    root = find_root_bracketed(lambda E: prob.wronskian(E, m), lo, hi, tol=tol)
    E = root.root
    out, inn = prob.shoot(E, m)
    chi = np.empty(prob.n + 1)
    chi[: m + 1] = out[: m + 1]
    chi[m + 1:] = inn[m + 1:] * (out[m] / inn[m])
    nodes = int(np.count_nonzero(chi[1:-2] * chi[2:-1] < 0))
    if chi[m] < 0:
        chi = -chi
    norm = _simpson(chi * chi, h)
    chi = chi / math.sqrt(norm)
    defect = abs(out[m + 1] / out[m] - inn[m + 1] / inn[m]) / h
    return E, prob.r, chi, nodes, defect


def _simpson(values, h):
    n = values.size - 1
    if n % 2:
        # last interval by the 3-point end correction
        tail = h * (5 * values[-1] + 8 * values[-2] - values[-3]) / 12.0
        return _simpson(values[:-1], h) + tail
    return h / 3.0 * (values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())


def solve_ground_state(
    spec: PotentialSpec,
    tol: float = 1e-10,
    h: float = DEFAULT_STEP,
    energy_hint: float | None = None,
    r_max: float | None = None,
    refine: bool = True,
) -> EigenResult:
    """Ground state by Numerov shooting.

    Args:
        spec: Potential.
        tol: Energy tolerance; used for the root bracket and, when
            ``refine``, for the step-halving test |E(h) - E(h/2)| <= tol.
        h: Initial uniform step (Bohr).
        energy_hint: Optional energy estimate; the first bracket tried is
            [1.2, 0.8] times it. Only the bracket is shared, never the value.
        r_max: Outer radius; default 40 decay lengths at the bracket top.
        refine: Halve ``h`` until the step-halving test passes.

    Raises:
        NoBoundState: If no ground state is found below E = 0.
        NonConvergence: If the state found has nodes.
    """
    if not tol > 0 or not h > 0:
        raise DomainError("tol and h must be positive")
    bracket = None
    if energy_hint is not None and energy_hint < 0:
        trial = (1.2 * energy_hint, 0.8 * energy_hint)
        try:
            res = _solve_at_step(spec, h, trial, tol, r_max)
            if res[3] == 0:
                bracket = trial
        except NoSignChange:
            pass
    if bracket is None:
        bracket = _bracket_by_nodes(spec)
    E, r, chi, nodes, defect = _solve_at_step(spec, h, bracket, tol, r_max)
    diff = math.nan
    while refine:
        h_next = h / 2
        E2, r2, chi2, nodes2, defect2 = _solve_at_step(spec, h_next, bracket, tol, r_max)
        diff = abs(E2 - E)
        E, r, chi, nodes, defect, h = E2, r2, chi2, nodes2, defect2, h_next
        if diff <= tol or h_next / 2 < MIN_STEP:
            break
    if nodes != 0:
        raise NonConvergence(f"matched state has {nodes} nodes; not the ground state")
    return EigenResult(E, r, chi, nodes, defect, h, diff)


def energy_at_step(spec: PotentialSpec, h: float, bracket: tuple[float, float], tol: float = 1e-14,
                   r_max: float | None = None) -> float:
    """Numerov eigenvalue at a fixed step, no refinement (for order studies)."""
    return _solve_at_step(spec, h, bracket, tol, r_max)[0]


def sample_chi(result: EigenResult, grid) -> RadialFunction | np.ndarray:
    """chi_D on another grid by local 4-point Lagrange interpolation (O(h^4)).

    ``grid`` may be a RadialGrid (returns a RadialFunction) or an array of
    radii (returns an array).

    Raises:
        ExtrapolationError: If any radius lies outside [0, r_max].
    """
    pts = grid.points if isinstance(grid, RadialGrid) else np.asarray(grid, dtype=float)
    if np.any(pts < 0) or np.any(pts > result.r_max * (1 + 1e-12)):
        raise ExtrapolationError(f"radius outside the solver range [0, {result.r_max}]")
    h = result.h
    chi = result.chi
    n = chi.size - 1
    t = pts / h
    near = np.rint(t)
    on_node = np.abs(t - near) < 1e-9
    base = np.clip(np.floor(t).astype(int) - 1, 0, n - 3)
    s = t - base
    c0, c1, c2, c3 = (chi[base + k] for k in range(4))
    vals = (
        -c0 * (s - 1) * (s - 2) * (s - 3) / 6.0
        + c1 * s * (s - 2) * (s - 3) / 2.0
        - c2 * s * (s - 1) * (s - 3) / 2.0
        + c3 * s * (s - 1) * (s - 2) / 6.0
    )
    idx = np.clip(near.astype(int), 0, n)
    vals = np.where(on_node, chi[idx], vals)
    if isinstance(grid, RadialGrid):
        return RadialFunction(grid, vals, "chi")
    return vals
