"""Unbiased Poisson estimators of ``(p - x)**v`` and their moment oracles.

For ``Y ~ Poi(n p)`` the polynomial

    h_{v,x}(y) = sum_l C(v, l) (-x)**(v-l) prod_{l' < l} (y - l') / n

satisfies ``E[h_{v,x}(Y)] = (p - x)**v``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .exceptions import DomainError

__all__ = [
    "HSpec",
    "h_eval",
    "exact_poisson_mean",
    "h_sq_poisson_mean",
    "poisson_tail_cutoff",
    "value_bound",
    "second_moment_bound",
]

MAX_V = 64


@dataclass(frozen=True)
class HSpec:
    v: int
    x: float
    n: int

    def __post_init__(self):
        if int(self.v) != self.v or not 0 <= self.v <= MAX_V:
            raise DomainError(f"v must be an integer in [0, {MAX_V}], got {self.v!r}")
        if not 0.0 <= self.x <= 1.0:
            raise DomainError(f"x must lie in [0, 1], got {self.x!r}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")


def _integer_coeffs(v, x, n):
    """``h = sum_l c_l (y)_l / den`` with integer ``c_l`` (``x = a/b`` exactly)."""
    a, b = float(x).as_integer_ratio()
    coeffs = [math.comb(v, l) * (-a) ** (v - l) * b**l * n ** (v - l) for l in range(v + 1)]
    return coeffs, b**v * n**v


def _falling_sum(coeffs, y):
    total, prod = 0, 1
    for l, c in enumerate(coeffs):
        if l:
            prod *= y - (l - 1)
            if prod == 0:
                break
        total += c * prod
    return total


def h_eval(spec: HSpec, y):
    """Evaluate ``h_{v,x}`` at non-negative integer count(s) ``y``.

    Accepts a scalar or an integer array.  The binomial sum cancels badly in
    binary64 near the roots of ``h``, so it is formed exactly in integers
    and rounded once (correctly rounded result).
    """
    y_arr = np.asarray(y)
    if np.any(y_arr < 0):
        raise DomainError("counts must be non-negative")
    coeffs, den = _integer_coeffs(spec.v, spec.x, spec.n)
    flat = [_falling_sum(coeffs, int(t)) / den for t in y_arr.ravel()]
    out = np.array(flat, dtype=float).reshape(y_arr.shape)
    return float(out) if out.ndim == 0 else out


def poisson_tail_cutoff(mu: float, tail_tol: float) -> int:
    """Smallest ``t`` whose Chernoff bound on ``P(Y > t)`` is below ``tail_tol``.

    Uses ``P(Y >= (1 + d) mu) <= (e**d / (1 + d)**(1 + d))**mu``.
    """
    if not 0.0 < tail_tol < 1.0:
        raise DomainError("tail_tol must lie in (0, 1)")
    if mu <= 0.0:
        return 0
    log_tol = math.log(tail_tol)

    def log_bound(d):
        return mu * (d - (1.0 + d) * math.log1p(d))

    hi = 1.0
    while log_bound(hi) > log_tol:
        hi *= 2.0
    lo = 0.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if log_bound(mid) > log_tol:
            lo = mid
        else:
            hi = mid
    # P(Y > t) = P(Y >= t + 1) <= P(Y >= (1 + hi) mu) once t + 1 >= (1 + hi) mu
    return max(0, math.ceil((1.0 + hi) * mu) - 1)


def _poisson_sum(values_fn, n, p, tail_tol):
    if not 0.0 < tail_tol <= 1e-6:
        raise DomainError("tail_tol must lie in (0, 1e-6]")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    mu = n * p
    t = np.arange(poisson_tail_cutoff(mu, tail_tol) + 1)
    pmf = stats.poisson.pmf(t, mu) if mu > 0 else (t == 0).astype(float)
    return math.fsum(np.asarray(values_fn(t), dtype=float) * pmf)


def exact_poisson_mean(spec: HSpec, p: float, tail_tol: float = 1e-12) -> float:
    """Truncated-sum value of ``E[h_{v,x}(Y)]`` for ``Y ~ Poi(n p)``."""
    return _poisson_sum(lambda t: h_eval(spec, t), spec.n, p, tail_tol)


def h_sq_poisson_mean(spec: HSpec, p: float, tail_tol: float = 1e-12) -> float:
    """Truncated-sum value of ``E[h_{v,x}(Y)**2]``."""
    return _poisson_sum(lambda t: np.square(h_eval(spec, t)), spec.n, p, tail_tol)


def value_bound(v: int, delta: float) -> float:
    """``(2 delta)**v``, valid for ``|h_{v,x}(m)|`` when
    ``delta >= max(|x - m/n|, sqrt(4 m v)/n)``."""
    return (2.0 * delta) ** v


def second_moment_bound(v: int, n: int, p: float, c_prime: float) -> float:
    """``2 p (2 c' ln n / n)**(2v - 1)``, valid for ``E[h_{v,0}(Y)**2]`` when
    ``n p`` and ``2 v`` are both at most ``c' ln n`` and ``v >= 1``."""
    if v < 1:
        raise DomainError("bound requires v >= 1")
    return 2.0 * p * (2.0 * c_prime * math.log(n) / n) ** (2 * v - 1)
