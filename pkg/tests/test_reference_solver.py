import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlmriccati import coulomb, custom, yukawa
from qlmriccati.errors import DomainError, ExtrapolationError, NoBoundState
from qlmriccati.grid import RadialGrid
from qlmriccati.potential import evaluate
from qlmriccati.reference_solver import energy_at_step, sample_chi, solve_ground_state

from test_qlm_engine import HULTHEN_DELTA, hulthen

# pinned from the first solver run (lambda = 0.2, tol = 1e-11, h = 1e-3 after halving)
PEAK_R_02 = 1.017
PEAK_CHI_02 = 0.7237361499395517


def simpson(y, h):
    from scipy.integrate import simpson as sp

    return sp(y, dx=h)


def test_hydrogen_energy_and_state(hydrogen_reference):
    res = hydrogen_reference
    assert res.E_D == pytest.approx(-0.5, abs=1e-9)
    assert res.nodes == 0
    assert np.max(np.abs(res.chi - 2 * res.r * np.exp(-res.r))) <= 1e-8


def test_hydrogen_virial(hydrogen_reference):
    res = hydrogen_reference
    r, chi, h = res.r, res.chi, res.h
    U = np.zeros_like(r)
    U[1:] = evaluate(coulomb(), r[1:])
    # fourth-order first derivative, one-sided at the ends
    d = np.empty_like(chi)
    d[2:-2] = (chi[:-4] - 8 * chi[1:-3] + 8 * chi[3:-1] - chi[4:]) / (12 * h)
    d[:2] = (-25 * chi[:2] + 48 * chi[1:3] - 36 * chi[2:4] + 16 * chi[3:5] - 3 * chi[4:6]) / (12 * h)
    d[-2:] = 0.0
    T = simpson(0.5 * d**2, h)
    V = simpson(chi**2 * U, h)
    assert T == pytest.approx(-res.E_D, abs=1e-7)
    assert V == pytest.approx(2 * res.E_D, abs=1e-7)


@pytest.mark.parametrize("lam, E_D, tol", [(0.2, -0.32680851, 5e-9), (0.5, -0.1481170, 5e-8), (0.8, -0.0447043, 5e-8)])
def test_table_energies(references, lam, E_D, tol):
    assert references[lam].E_D == pytest.approx(E_D, abs=tol)


@pytest.mark.parametrize("lam", [0.2, 0.5, 0.8])
def test_invariants(references, lam):
    res = references[lam]
    assert res.nodes == 0
    assert simpson(res.chi**2, res.h) == pytest.approx(1.0, abs=1e-10)
    assert np.all(res.chi[1:-1] > 0)
    assert res.match_defect <= 1e-9
    assert res.step_difference <= 1e-11


def test_without_hint_matches_hinted(references):
    assert solve_ground_state(yukawa(0.5), tol=1e-11).E_D == pytest.approx(references[0.5].E_D, abs=2e-11)


def test_step_halving_is_fourth_order():
    bracket = (-0.16, -0.13)
    E = [energy_at_step(yukawa(0.5), h, bracket) for h in (0.04, 0.02, 0.01)]
    ratio = abs(E[0] - E[1]) / abs(E[1] - E[2])
    assert 12 <= ratio <= 20


def test_arbitrary_potential():
    kappa = 1 - HULTHEN_DELTA / 2
    res = solve_ground_state(hulthen(), tol=1e-11)
    assert res.E_D == pytest.approx(-kappa**2 / 2, abs=1e-10)
    r = res.r
    exact = (-np.expm1(-HULTHEN_DELTA * r)) * np.exp(-kappa * r)
    exact /= math.sqrt(simpson(exact**2, res.h))
    assert np.max(np.abs(res.chi - exact)) < 1e-8


def test_regular_potential_well():
    # U = -2 e^{-r}: regular at the origin, so chi'' starts from f(0) chi(0) = 0
    res = solve_ground_state(custom(lambda r: -2.0 * np.exp(-r), decay_scale=1.0), tol=1e-11)
    assert res.nodes == 0 and res.E_D < 0


def test_no_bound_state():
    with pytest.raises(NoBoundState):
        solve_ground_state(yukawa(1.3))
    with pytest.raises(NoBoundState):
        solve_ground_state(custom(lambda r: 0.1 * np.exp(-r), decay_scale=1.0))


def test_bad_arguments():
    with pytest.raises(DomainError):
        solve_ground_state(coulomb(), tol=0.0)


def test_sample_identity(references):
    res = references[0.2]
    np.testing.assert_array_equal(sample_chi(res, res.r[1:]), res.chi[1:])
    f = sample_chi(res, res.chi_D.grid)
    np.testing.assert_array_equal(f.values, res.chi[1:])


@given(x=st.lists(st.floats(0.0, 30.0), min_size=1, max_size=40))
def test_sample_hydrogen_anywhere(hydrogen_reference, x):
    x = np.array(x)
    np.testing.assert_allclose(sample_chi(hydrogen_reference, x), 2 * x * np.exp(-x), atol=1e-8)


def test_sample_preserves_normalization(references):
    res = references[0.5]
    grid = RadialGrid.gauss(res.r_max, panel_width=0.25)
    f = sample_chi(res, grid)
    assert grid.integrate(f.values**2) == pytest.approx(1.0, abs=1e-8)


def test_sample_refuses_extrapolation(references):
    res = references[0.2]
    with pytest.raises(ExtrapolationError):
        sample_chi(res, [res.r_max + 1.0])


def test_peak_regression_anchor(references):
    res = references[0.2]
    i = int(np.argmax(res.chi))
    assert res.r[i] == pytest.approx(PEAK_R_02, abs=1e-12)
    peak = sample_chi(res, [PEAK_R_02])[0]
    assert np.isfinite(peak) and peak > 0
    assert peak == pytest.approx(PEAK_CHI_02, abs=1e-9)
