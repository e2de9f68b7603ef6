import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from ppest.exceptions import BadParam, DomainError
from ppest.partition import (
    PartitionConfig,
    approx_interval,
    degree_param,
    interval_I,
    interval_Idstar,
    interval_Istar,
    locate,
    practical_degree,
    raw_index,
)


@pytest.fixture
def cfg01():
    return PartitionConfig.from_width(100, 0.01)


def _pair(iv):
    return (iv.lo, iv.hi)


class TestIntervals:
    def test_I(self, cfg01):
        assert _pair(interval_I(cfg01, 1)) == (0.0, 0.01)
        assert _pair(interval_I(cfg01, 2)) == pytest.approx((0.01, 0.04))
        assert _pair(interval_I(cfg01, 10)) == pytest.approx((0.81, 1.0))

    def test_star(self, cfg01):
        assert _pair(interval_Istar(cfg01, 1)) == pytest.approx((0.0, 0.04))
        assert _pair(interval_Idstar(cfg01, 2)) == pytest.approx((0.0, 0.16))
        assert _pair(interval_Idstar(cfg01, 5)) == pytest.approx((0.04, 0.49))

    def test_approx_interval_cut_at_one(self, cfg01):
        assert approx_interval(cfg01, 10).hi == 1.0
        assert interval_Idstar(cfg01, 10).hi == pytest.approx(1.44)

    def test_index_starts_at_one(self, cfg01):
        for fn in (interval_I, interval_Istar, interval_Idstar):
            with pytest.raises(DomainError):
                fn(cfg01, 0)


class TestLocate:
    def test_examples(self, cfg01):
        assert locate(cfg01, 0.0005) == 1
        assert locate(cfg01, 0.01) == 2
        assert locate(cfg01, 1.0) == 10

    def test_domain(self, cfg01):
        with pytest.raises(DomainError):
            locate(cfg01, 1.0001)
        with pytest.raises(DomainError):
            locate(cfg01, -1e-12)

    def test_raw_index_not_capped(self, cfg01):
        assert raw_index(cfg01, 1.3) == 12

    @pytest.mark.parametrize("n", [50, 1000, 10_000, 123_457])
    def test_midpoint_identity(self, n):
        cfg = PartitionConfig(n)
        for j in range(1, cfg.M_n + 1):
            iv = interval_I(cfg, j)
            mid = min(iv.midpoint, 1.0)
            if j == cfg.M_n:
                mid = 0.5 * (iv.lo + min(iv.hi, 1.0))
            assert locate(cfg, mid) == j


class TestDegree:
    def test_examples(self):
        assert degree_param(100**10, 0.1) == 1
        assert degree_param(90**10, 0.1) == 0
        assert degree_param(2**60, 0.25) == 2

    @pytest.mark.parametrize("n", [2, 10, 1000, 10**6, 10**12, 2**80])
    @pytest.mark.parametrize("lam", [0.01, 0.1, 0.2, 0.25])
    def test_maximality(self, n, lam):
        d = degree_param(n, lam)
        budget = lam * math.log2(n)
        ok = lambda k: k == 0 or math.log2(k) + 4.5 * k + 2 <= budget + 1e-12
        assert ok(d) and not ok(d + 1)

    def test_bad_params(self):
        with pytest.raises(BadParam):
            degree_param(1, 0.1)
        with pytest.raises(BadParam):
            degree_param(100, 0.3)

    def test_practical(self):
        assert practical_degree(1000) == math.floor(1.6 * math.log(1000))
        assert PartitionConfig(1000, degree_mode="practical").d_n == 11
        assert PartitionConfig(1000, degree=4).d_n == 4


class TestConfig:
    def test_derived(self):
        cfg = PartitionConfig(10_000, c=2.0)
        assert cfg.c_n == pytest.approx(2 * math.log(1e4) / 1e4)
        assert cfg.M_n == math.ceil(1 / math.sqrt(cfg.c_n))

    def test_exact_square_width(self):
        assert PartitionConfig.from_width(100, 0.25).M_n == 2

    @pytest.mark.parametrize(
        "kw",
        [dict(n=1), dict(n=10.5), dict(n=100, c=0), dict(n=100, lam=0.0), dict(n=100, T=-1.0),
         dict(n=100, degree_mode="fast"), dict(n=100, degree=-1), dict(n=3, c=10.0)],
    )
    def test_rejects(self, kw):
        with pytest.raises(BadParam):
            PartitionConfig(**kw)

    def test_with_n(self):
        cfg = PartitionConfig(1000, c=3.0, degree_mode="practical")
        assert cfg.with_n(2000).n == 2000 and cfg.with_n(2000).c == 3.0


@settings(max_examples=60, deadline=None)
@given(n=st.integers(20, 10**7), c=st.floats(0.5, 4.0))
def test_coverage_and_nesting(n, c):
    cfg = PartitionConfig(n, c=c)
    if cfg.c_n > 1:
        return
    M = cfg.M_n
    assert M >= 1
    assert interval_I(cfg, 1).lo == 0.0
    assert interval_I(cfg, M).hi >= 1.0
    assert interval_I(cfg, M - 1).hi < 1.0 if M > 1 else True
    for j in range(1, M):
        assert interval_I(cfg, j).hi == interval_I(cfg, j + 1).lo
    for j in range(1, M + 1):
        a, b, e = interval_I(cfg, j), interval_Istar(cfg, j), interval_Idstar(cfg, j)
        assert e.lo <= b.lo <= a.lo and a.hi <= b.hi <= e.hi
        if j >= 2:
            assert b.lo == interval_I(cfg, j - 1).lo
        assert b.hi == interval_I(cfg, j + 1).hi


@settings(max_examples=200, deadline=None)
@given(n=st.integers(20, 10**6), x=st.floats(0.0, 1.0))
def test_locate_contains(n, x):
    cfg = PartitionConfig(n)
    j = locate(cfg, x)
    iv = interval_I(cfg, j)
    assert 1 <= j <= cfg.M_n
    assert iv.lo <= x and (x < iv.hi or j == cfg.M_n)


@pytest.mark.parametrize("n", [1000, 10_000])
def test_chernoff_separation(n):
    """Frequencies from p outside I*_j rarely land in I_j."""
    cfg = PartitionConfig(n, c=2.0)
    rng = np.random.default_rng(7)
    trials = 10**6
    worst_exact = 0.0
    for j in range(1, cfg.M_n + 1):
        I = interval_I(cfg, j)
        Is = interval_Istar(cfg, j)
        # nearest probabilities just outside I*_j on either side
        ps = [p for p in (Is.lo * 0.999, Is.hi * 1.001) if 0 < p <= 1 and p not in Is]
        for p in ps:
            freq = rng.poisson(n * p, size=trials) / n
            hits = np.mean((freq >= I.lo) & (freq < I.hi))
            assert hits < 10 * n**-3.0
            lo_count, hi_count = math.ceil(n * I.lo - 1e-9), math.ceil(n * I.hi - 1e-9) - 1
            exact = stats.poisson.cdf(hi_count, n * p) - stats.poisson.cdf(lo_count - 1, n * p)
            worst_exact = max(worst_exact, exact)
    # the exact probability is the sharper statement and is far below the 10 n^-3 target
    assert worst_exact < 10 * n**-3.0
