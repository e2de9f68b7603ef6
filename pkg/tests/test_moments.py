import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ppest.exceptions import DomainError
from ppest.moments import (
    HSpec,
    exact_poisson_mean,
    h_eval,
    h_sq_poisson_mean,
    poisson_tail_cutoff,
    second_moment_bound,
    value_bound,
)


class TestHEval:
    def test_zero_degree(self):
        for y in (0, 3, 100):
            assert h_eval(HSpec(0, 0.37, 10), y) == 1.0

    def test_linear(self):
        assert h_eval(HSpec(1, 0.2, 100), 30) == pytest.approx(0.1, abs=1e-15)

    def test_product_form(self):
        assert h_eval(HSpec(2, 0.0, 10), 3) == pytest.approx(0.06, abs=1e-15)

    def test_vectorised_matches_scalar(self):
        spec = HSpec(5, 0.3, 40)
        ys = np.arange(60)
        np.testing.assert_allclose(h_eval(spec, ys), [h_eval(spec, int(y)) for y in ys], rtol=0, atol=0)

    def test_high_degree_exact_path(self):
        spec = HSpec(12, 0.25, 50)
        # x - y/n = 0.25 - 12/50 is tiny; a rational reference avoids any cancellation
        y = 12
        ref = sum(
            math.comb(12, l) * Fraction(-0.25) ** (12 - l) * math.prod(Fraction(y - k, 50) for k in range(l))
            for l in range(13)
        )
        assert h_eval(spec, y) == float(ref)

    def test_negative_count(self):
        with pytest.raises(DomainError):
            h_eval(HSpec(2, 0.1, 10), -1)

    @pytest.mark.parametrize("kw", [dict(v=-1, x=0.1, n=5), dict(v=65, x=0.1, n=5),
                                    dict(v=2, x=1.5, n=5), dict(v=2, x=0.1, n=0)])
    def test_spec_validation(self, kw):
        with pytest.raises(DomainError):
            HSpec(**kw)


class TestPoissonMean:
    def test_examples(self):
        assert exact_poisson_mean(HSpec(2, 0.0, 50), 0.3) == pytest.approx(0.09, abs=1e-9)
        assert exact_poisson_mean(HSpec(1, 0.5, 20), 0.5) == pytest.approx(0.0, abs=1e-9)
        assert exact_poisson_mean(HSpec(3, 0.1, 100), 0.25) == pytest.approx(0.003375, abs=1e-9)

    @pytest.mark.parametrize("v", range(7))
    @pytest.mark.parametrize("x", [0.0, 0.1, 0.5])
    @pytest.mark.parametrize("n", [20, 100, 1000])
    @pytest.mark.parametrize("p", [0.0, 0.05, 0.3, 0.9])
    def test_unbiased(self, v, x, n, p):
        assert abs(exact_poisson_mean(HSpec(v, x, n), p, 1e-12) - (p - x) ** v) <= 1e-9

    def test_high_degree_unbiased(self):
        assert exact_poisson_mean(HSpec(10, 0.2, 200), 0.25, 1e-12) == pytest.approx(0.05**10, abs=1e-12)

    def test_tail_tol_range(self):
        with pytest.raises(DomainError):
            exact_poisson_mean(HSpec(1, 0.0, 10), 0.5, tail_tol=1e-3)


class TestSecondMoment:
    def test_linear_closed_form(self):
        assert h_sq_poisson_mean(HSpec(1, 0.0, 100), 0.02) == pytest.approx(0.0006, abs=1e-12)

    def test_zero_degree(self):
        assert h_sq_poisson_mean(HSpec(0, 0.0, 100), 0.3) == pytest.approx(1.0, abs=1e-12)

    def test_factorial_moment_oracle(self):
        # (Y)_2^2 = (Y)_4 + 4 (Y)_3 + 2 (Y)_2, so E = mu^4 + 4 mu^3 + 2 mu^2
        n, p = 100, 0.01
        mu = n * p
        expected = (mu**4 + 4 * mu**3 + 2 * mu**2) / n**4
        got = h_sq_poisson_mean(HSpec(2, 0.0, n), p)
        assert got == pytest.approx(expected, rel=1e-10)
        c_prime = max(n * p, 4) / math.log(n)
        assert got <= second_moment_bound(2, n, p, c_prime)


class TestCutoff:
    @pytest.mark.parametrize("mu", [0.01, 1.0, 30.0, 900.0])
    @pytest.mark.parametrize("tol", [1e-6, 1e-12])
    def test_mass_below_tol(self, mu, tol):
        t = poisson_tail_cutoff(mu, tol)
        assert stats.poisson.sf(t, mu) < tol

    def test_zero_mean(self):
        assert poisson_tail_cutoff(0.0, 1e-9) == 0


@pytest.mark.parametrize("v", range(1, 7))
@pytest.mark.parametrize("x", [0.0, 0.13, 0.5, 0.9])
@pytest.mark.parametrize("n", [10, 57, 200])
def test_difference_recurrence(v, x, n):
    s = np.arange(1, 4 * n + 1)
    a = h_eval(HSpec(v, x, n), s)
    b = h_eval(HSpec(v, x, n), s - 1)
    rhs = (v / n) * h_eval(HSpec(v - 1, x, n), s - 1)
    # relative to the size of the terms: the subtraction cannot do better
    scale = np.maximum.reduce([np.abs(a), np.abs(b), np.abs(rhs)])
    assert np.all(np.abs(a - b - rhs) <= 1e-12 * scale)


@settings(max_examples=300, deadline=None)
@given(
    v=st.integers(0, 8),
    x=st.floats(0.0, 1.0),
    n=st.integers(5, 2000),
    m=st.integers(0, 2000),
    slack=st.floats(1.0, 3.0),
)
def test_value_bound(v, x, n, m, slack):
    delta = slack * max(abs(x - m / n), math.sqrt(4 * m * v) / n)
    h = h_eval(HSpec(v, x, n), m)
    assert abs(h) <= value_bound(v, delta) * (1 + 1e-9) + 1e-300


@settings(max_examples=80, deadline=None)
@given(
    v=st.integers(1, 6),
    n=st.integers(20, 5000),
    p=st.floats(0.0, 1.0),
    extra=st.floats(1.0, 2.0),
)
def test_second_moment_bound(v, n, p, extra):
    c_prime = extra * max(n * p, 2 * v) / math.log(n)
    got = h_sq_poisson_mean(HSpec(v, 0.0, n), p)
    assert got <= second_moment_bound(v, n, p, c_prime) * (1 + 1e-9) + 1e-300
