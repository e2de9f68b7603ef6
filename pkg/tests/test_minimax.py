import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppest.exceptions import DomainError, NonConvergence
from ppest.minimax import (
    CERT_TOL,
    Interval,
    LocalPolynomial,
    anchor_shift,
    coefficient_bound_ok,
    eval_local,
    lp_minmax,
    minimax_approx,
    minmax_deviation,
    remez_minmax,
)

from conftest import entropy_term, grid_lp_deviation

UNIT = Interval(0.0, 1.0)

BATTERY = {
    "square": lambda x: x**2,
    "exp": np.exp,
    "abs": lambda x: np.abs(x - 0.5),
    "entropy": entropy_term,
    "sqrt": np.sqrt,
    "sin": lambda x: np.sin(3 * x),
}


class TestEvalLocal:
    def test_constant(self):
        assert eval_local(LocalPolynomial((3.0,)), 0.7) == 3.0

    def test_identity(self):
        assert eval_local(LocalPolynomial((0.0, 1.0)), 0.25) == 0.25

    def test_quadratic(self):
        assert eval_local(LocalPolynomial((-0.125, 0.0, 1.0)), 0.5) == pytest.approx(0.125, abs=1e-15)

    def test_vectorised(self):
        y = np.linspace(0, 1, 5)
        np.testing.assert_allclose(eval_local(LocalPolynomial((1.0, 2.0)), y), 1 + 2 * y)


class TestInterval:
    def test_rejects_reversed(self):
        with pytest.raises(DomainError):
            Interval(1.0, 0.0)

    def test_rejects_infinite(self):
        with pytest.raises(DomainError):
            Interval(0.0, math.inf)

    def test_local_roundtrip(self):
        iv = Interval(0.2, 0.7)
        assert iv.to_global(iv.to_local(0.45)) == pytest.approx(0.45)


class TestRemez:
    def test_identity_degree0(self):
        cert = remez_minmax(lambda x: x, 0, UNIT)
        assert cert.poly.coeffs[0] == pytest.approx(0.5, abs=1e-12)
        assert cert.sup_error == pytest.approx(0.5, abs=1e-12)

    def test_square_degree1(self):
        cert = remez_minmax(lambda x: x**2, 1, UNIT)
        np.testing.assert_allclose(cert.poly.coeffs, [-0.125, 1.0], atol=1e-9)
        assert cert.sup_error == pytest.approx(0.125, abs=1e-9)

    def test_exp_degree1_matches_lp(self):
        cert = remez_minmax(np.exp, 1, UNIT)
        lp, _ = grid_lp_deviation(np.exp, 1, 0.0, 1.0)
        assert cert.sup_error == pytest.approx(lp, abs=1e-4)
        assert cert.sup_error == pytest.approx(0.1059, abs=1e-4)

    def test_abs_degree1(self):
        assert minmax_deviation(BATTERY["abs"], 1, UNIT) == pytest.approx(0.25, abs=1e-9)

    def test_constant_any_degree(self):
        for d in (0, 3, 7):
            iv = Interval(0.1, 0.4)
            assert minmax_deviation(lambda x: np.full_like(x, 7.0), d, iv) == 0.0

    def test_linear_is_exact(self):
        cert = remez_minmax(lambda x: 2 * x - 1, 3, Interval(0.2, 0.6))
        assert cert.method == "exact"
        assert cert.sup_error < 1e-14

    def test_degenerate_interval(self):
        cert = remez_minmax(np.exp, 2, Interval(0.3, 0.3))
        assert cert.sup_error == 0.0
        assert cert.poly.coeffs[0] == pytest.approx(math.exp(0.3))

    def test_bad_degree(self):
        with pytest.raises(DomainError):
            remez_minmax(np.exp, -1, UNIT)

    def test_nonconvergence_raised_on_tiny_budget(self):
        with pytest.raises(NonConvergence):
            remez_minmax(np.sqrt, 8, UNIT, tol=1e-14, max_iter=1)

    def test_fallback_to_lp(self):
        cert = minimax_approx(np.sqrt, 8, UNIT, tol=1e-14, max_iter=1)
        assert cert.method == "lp"
        assert cert.sup_error == pytest.approx(minmax_deviation(np.sqrt, 8, UNIT), rel=1e-2)


@pytest.mark.parametrize("name", sorted(BATTERY))
@pytest.mark.parametrize("d", [0, 1, 2, 3])
def test_oracle_equivalence(name, d):
    g = BATTERY[name]
    lp, _ = grid_lp_deviation(g, d, 0.0, 1.0)
    assert minmax_deviation(g, d, UNIT) == pytest.approx(lp, abs=1e-4)


@pytest.mark.parametrize("name", sorted(BATTERY))
@pytest.mark.parametrize("d", [1, 2, 4, 6, 8])
def test_equioscillation(name, d):
    cert = remez_minmax(BATTERY[name], d, Interval(0.0, 0.6))
    if cert.method == "exact":
        return
    assert len(cert.alternation_points) == d + 2
    assert np.all(np.diff(cert.alternation_points) > 0)
    assert np.all(cert.residual_signs[1:] == -cert.residual_signs[:-1])
    iv = cert.interval
    x = iv.lo + cert.alternation_points * iv.width
    res = np.abs(BATTERY[name](x) - eval_local(cert.poly, cert.alternation_points))
    # |residual| within [E(1 - tol), E] up to the rounding noise of float Horner
    noise = 32 * np.finfo(float).eps * (1 + sum(abs(a) for a in cert.poly.coeffs))
    assert np.all(res <= cert.sup_error + noise)
    assert np.all(res >= cert.sup_error * (1 - CERT_TOL) - noise)


@pytest.mark.parametrize("name", sorted(BATTERY))
def test_monotone_in_degree(name):
    devs = [minmax_deviation(BATTERY[name], d, UNIT) for d in range(0, 10)]
    assert all(b <= a + CERT_TOL for a, b in zip(devs, devs[1:]))


@pytest.mark.parametrize("name", sorted(BATTERY))
@pytest.mark.parametrize("d", [1, 3, 5, 9])
def test_coefficient_bound(name, d):
    assert coefficient_bound_ok(remez_minmax(BATTERY[name], d, Interval(0.0, 0.5)).poly)


@settings(max_examples=30, deadline=None)
@given(
    lo=st.floats(0.0, 0.9),
    width=st.floats(1e-3, 0.3),
    d=st.integers(0, 6),
    a=st.floats(0.2, 3.0),
)
def test_power_family_properties(lo, width, d, a):
    g = lambda x: np.power(x, a)
    iv = Interval(lo, min(1.0, lo + width))
    cert = minimax_approx(g, d, iv)
    # the best fit beats the constant midrange and is certified on the stored poly
    vals = g(np.linspace(iv.lo, iv.hi, 2001))
    assert cert.sup_error <= 0.5 * (vals.max() - vals.min()) + 1e-12
    y = np.linspace(0, 1, 2001)
    assert np.max(np.abs(vals - eval_local(cert.poly, y))) <= cert.sup_error * (1 + 1e-8) + 1e-14
    assert coefficient_bound_ok(cert.poly)


class TestAnchorShift:
    def test_identity_unchanged(self):
        cert = remez_minmax(lambda x: x, 1, UNIT)
        shifted = anchor_shift(cert, lambda x: x, 0.0)
        np.testing.assert_allclose(shifted.coeffs, [0.0, 1.0], atol=1e-12)

    def test_constant_to_anchor(self):
        cert = remez_minmax(lambda x: x, 0, UNIT)
        assert anchor_shift(cert, lambda x: x, 0.0).coeffs == (0.0,)

    def test_entropy_anchor(self):
        iv = Interval(0.01, 0.04)
        cert = remez_minmax(entropy_term, 3, iv)
        shifted = anchor_shift(cert, entropy_term, 0.01)
        assert shifted.coeffs[0] == pytest.approx(-0.01 * math.log(0.01), rel=1e-12)
        assert shifted.coeffs[0] == pytest.approx(0.04605, abs=1e-5)

    def test_shift_at_most_doubles_error(self):
        iv = Interval(0.0, 0.3)
        cert = remez_minmax(entropy_term, 4, iv)
        shifted = anchor_shift(cert, entropy_term, 0.0)
        y = np.linspace(0, 1, 5001)
        err = np.max(np.abs(entropy_term(iv.lo + y * iv.width) - eval_local(shifted, y)))
        assert err <= 2 * cert.sup_error * (1 + 1e-9)

    def test_wrong_anchor(self):
        cert = remez_minmax(np.exp, 1, UNIT)
        with pytest.raises(DomainError):
            anchor_shift(cert, np.exp, 0.5)
