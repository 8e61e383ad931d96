import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qlmriccati.errors import DomainError, NonConvergence, NonFiniteSample, NoSignChange
from qlmriccati.numerics import (
    COTH_SERIES_CROSSOVER,
    EI_CROSSOVER,
    coth_minus_inverse,
    coth_stable,
    expint_ei,
    find_root_bracketed,
    integrate_adaptive,
    integrate_cumulative,
    integrate_semi_infinite,
)

mpmath.mp.dps = 40


def ei_oracle(x):
    # power series summed at 60 digits; independent of mpmath.ei
    with mpmath.workdps(60):
        x = mpmath.mpf(x)
        s, term, k = mpmath.mpf(0), mpmath.mpf(1), 0
        while True:
            k += 1
            term *= x / k
            add = term / k
            s += add
            if abs(add) < mpmath.mpf(10) ** -70 * max(abs(s), 1):
                break
        return float(mpmath.euler + mpmath.log(-x) + s)


class TestQuadrature:
    def test_constant(self):
        res = integrate_adaptive(lambda x: np.ones_like(x), 0.0, 1.0)
        assert res.value == pytest.approx(1.0, abs=1e-14)
        assert res.error_estimate >= 0 and res.evaluations >= 1

    def test_exponential_semi_infinite(self):
        res = integrate_semi_infinite(lambda x: np.exp(-2 * x), 0.0, decay_scale=2.0)
        assert res.value == pytest.approx(0.5, abs=1e-12)

    @pytest.mark.parametrize("f, expected", [(lambda x: np.exp(-x), 1.0), (lambda x: x * np.exp(-x), 1.0)])
    def test_gamma_integrals(self, f, expected):
        assert integrate_semi_infinite(f, 0.0, decay_scale=1.0).value == pytest.approx(expected, abs=1e-11)

    def test_guess_overlap_closed_form(self, guesses):
        p = guesses[0.2]
        f = lambda x: (np.exp(-p.eta * x) - np.exp(-p.a * x)) ** 2
        exact = (p.mu - p.eta) ** 2 / (p.eta * p.mu * p.a)
        assert exact == pytest.approx(1 / (2 * p.eta) + 1 / (2 * p.a) - 2 / (p.eta + p.a), rel=1e-13)
        res = integrate_semi_infinite(f, 0.0, decay_scale=2 * p.eta)
        assert res.value == pytest.approx(exact, abs=1e-11)

    def test_normalized_guess(self, guesses):
        from qlmriccati.zeroth_iteration import chi0

        p = guesses[0.2]
        res = integrate_semi_infinite(lambda x: chi0(p, x) ** 2, 0.0, decay_scale=2 * p.eta)
        assert res.value == pytest.approx(1.0, abs=1e-11)

    def test_scalar_only_integrand(self):
        res = integrate_adaptive(lambda x: math.sin(x), 0.0, math.pi)
        assert res.value == pytest.approx(2.0, abs=1e-12)

    def test_nonfinite_sample(self):
        with pytest.raises(NonFiniteSample):
            integrate_adaptive(lambda x: 1.0 / (x - 0.5) ** 0 * np.where(x > 0.3, np.nan, 1.0), 0.0, 1.0)

    def test_subdivision_limit(self):
        with pytest.raises(NonConvergence):
            integrate_adaptive(lambda x: 1.0 / np.sqrt(np.abs(x - 0.3)), 0.0, 1.0, tol=1e-14, max_intervals=20)

    def test_bad_interval(self):
        with pytest.raises(DomainError):
            integrate_adaptive(np.exp, 1.0, 0.0)

    def test_deterministic(self):
        f = lambda x: np.exp(-x) * np.cos(3 * x)
        assert integrate_adaptive(f, 0, 7) == integrate_adaptive(f, 0, 7)

    @given(
        alpha=st.floats(-5, 5), beta=st.floats(-5, 5),
        c1=st.floats(0.2, 3.0), c2=st.floats(0.2, 3.0),
    )
    def test_linearity(self, alpha, beta, c1, c2):
        tol = 1e-11
        f = lambda x: np.exp(-c1 * x) * np.sin(x)
        g = lambda x: x**2 * np.exp(-c2 * x)
        lhs = integrate_adaptive(lambda x: alpha * f(x) + beta * g(x), 0.0, 5.0, tol=tol).value
        rhs = alpha * integrate_adaptive(f, 0.0, 5.0, tol=tol).value + beta * integrate_adaptive(g, 0.0, 5.0, tol=tol).value
        assert abs(lhs - rhs) <= 10 * tol * max(1.0, abs(lhs))

    @given(x=st.lists(st.floats(0.0, 12.0), min_size=1, max_size=30))
    def test_cumulative_matches_antiderivative(self, x):
        x = np.array(x)
        got = integrate_cumulative(lambda t: t * np.exp(-t), x)
        exact = 1.0 - (1.0 + x) * np.exp(-x)
        np.testing.assert_allclose(got, exact, atol=1e-14)


class TestRoots:
    def test_linear(self):
        assert find_root_bracketed(lambda x: x - 0.5, 0.0, 1.0).root == pytest.approx(0.5, abs=1e-12)

    def test_sqrt2(self):
        res = find_root_bracketed(lambda x: x * x - 2, 1.0, 2.0)
        assert res.root == pytest.approx(math.sqrt(2), abs=1e-12)
        assert res.bracket_width <= 1e-12

    def test_no_sign_change(self):
        with pytest.raises(NoSignChange):
            find_root_bracketed(lambda x: x * x + 1, -1.0, 1.0)

    def test_eta_equation(self):
        from qlmriccati.potential import yukawa
        from qlmriccati.zeroth_iteration import _eta_residual

        spec = yukawa(0.2)
        res = find_root_bracketed(lambda e: _eta_residual(e, spec), 0.5, 0.99)
        assert res.root == pytest.approx(0.80844, abs=1e-5)
        assert -res.root**2 / 2 == pytest.approx(-0.32679, abs=5e-6)

    @given(root=st.floats(-3, 3), shift=st.floats(0.1, 2), k=st.integers(1, 3))
    def test_residual_bound(self, root, shift, k):
        f = lambda x: (x - root) ** (2 * k - 1) + 0.1 * (x - root)
        lo, hi = root - shift, root + 2 * shift
        tol = 1e-12
        res = find_root_bracketed(f, lo, hi, tol=tol)
        assert abs(res.root - root) <= tol
        assert abs(f(res.root)) <= tol * max(abs(f(lo)), abs(f(hi)))


class TestEi:
    def test_minus_one(self):
        assert expint_ei(-1.0) == pytest.approx(-0.219383934395520, rel=1e-14)

    def test_small_argument_series(self):
        x = -0.001
        three_terms = 0.5772156649015329 + math.log(0.001) - 0.001
        assert expint_ei(x) == pytest.approx(three_terms, abs=1e-6)
        assert expint_ei(x) == pytest.approx(-6.33154, abs=1e-5)

    def test_far_tail(self):
        assert expint_ei(-800.0) == 0.0
        v = expint_ei(-600.0)
        assert v < 0 and v > -1e-250

    @pytest.mark.parametrize("x", [0.0, 1.0, np.nan])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            expint_ei(x)

    def test_oracle_grid(self):
        xs = -np.geomspace(1e-4, 50.0, 50)
        got = expint_ei(xs)
        ref = np.array([ei_oracle(x) for x in xs])
        assert np.max(np.abs(got / ref - 1)) <= 1e-12

    def test_wide_range_against_mpmath(self):
        xs = -np.concatenate([np.geomspace(1e-300, 1e-5, 20), np.geomspace(1e-5, 700, 200)])
        ref = np.array([float(mpmath.ei(x)) for x in xs])
        assert np.max(np.abs(expint_ei(xs) / ref - 1)) <= 1e-13

    def test_branches_agree_at_crossover(self):
        x = -EI_CROSSOVER
        both = expint_ei(np.array([x * (1 - 1e-12), x * (1 + 1e-12)]))
        assert both[0] == pytest.approx(both[1], rel=1e-11)

    @given(x=st.floats(-50.0, -0.01))
    def test_derivative_identity(self, x):
        h = abs(x) * 1e-6
        fd = (expint_ei(x + h) - expint_ei(x - h)) / (2 * h)
        assert fd == pytest.approx(math.exp(x) / x, rel=1e-6)


class TestCoth:
    def test_saturation(self):
        assert coth_stable(100.0) == 1.0
        assert coth_stable(-100.0) == -1.0

    def test_tiny(self):
        assert coth_stable(1e-8) == pytest.approx(1e8 + 3.33e-9, rel=1e-15)

    def test_one(self):
        ref = float((mpmath.e**2 + 1) / (mpmath.e**2 - 1))
        assert coth_stable(1.0) == pytest.approx(1.3130352854993312, rel=1e-15)
        assert coth_stable(1.0) == pytest.approx(ref, rel=1e-15)

    def test_zero(self):
        with pytest.raises(DomainError):
            coth_stable(0.0)

    def test_branches_agree(self):
        series = lambda x: 1 / x + x / 3 - x**3 / 45
        below, above = COTH_SERIES_CROSSOVER * (1 - 1e-9), COTH_SERIES_CROSSOVER * (1 + 1e-9)
        assert coth_stable(below) == series(below)
        assert coth_stable(above) == pytest.approx(series(above), rel=1e-13)

    @given(x=st.floats(-5, 5).filter(lambda v: v != 0))
    def test_minus_inverse_odd_and_accurate(self, x):
        ref = float(mpmath.coth(x) - 1 / mpmath.mpf(x))
        assert coth_minus_inverse(x) == pytest.approx(ref, rel=1e-13, abs=1e-16)
        assert coth_minus_inverse(-x) == -coth_minus_inverse(x)

    def test_minus_inverse_at_zero(self):
        assert coth_minus_inverse(0.0) == 0.0
