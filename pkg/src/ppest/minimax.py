"""Uniform-norm (min-max) polynomial approximation on an interval.

Polynomials are stored in the monomial basis of the local coordinate
``y = (x - lo) / (hi - lo)`` in ``[0, 1]``.  The Remez exchange itself runs in
the Chebyshev basis of ``t = 2y - 1`` for conditioning and converts at the end.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import linprog

from .exceptions import DomainError, NonConvergence

__all__ = [
    "Interval",
    "LocalPolynomial",
    "ApproxCertificate",
    "eval_local",
    "remez_minmax",
    "lp_minmax",
    "minimax_approx",
    "minmax_deviation",
    "anchor_shift",
    "coefficient_bound_ok",
    "CERT_TOL",
]

CERT_TOL = 1e-9

RealFunction = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def to_local(self, x):
        return (np.asarray(x, dtype=float) - self.lo) / self.width

    def to_global(self, y):
        return self.lo + self.width * np.asarray(y, dtype=float)


@dataclass(frozen=True)
class LocalPolynomial:
    """Polynomial ``sum_v coeffs[v] * y**v`` on the local coordinate ``y``."""

    coeffs: tuple

    def __post_init__(self):
        coeffs = tuple(float(a) for a in np.atleast_1d(self.coeffs))
        if not coeffs:
            raise DomainError("a polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, y):
        return eval_local(self, y)


@dataclass(frozen=True)
class ApproxCertificate:
    """Result of a min-max fit together with its equioscillation evidence.

    ``method`` is ``"remez"`` for a converged exchange, ``"exact"`` when the
    function is reproduced to rounding level (alternation is then vacuous), and
    ``"lp"`` for the dense-grid linear-program fallback.
    """

    poly: LocalPolynomial
    sup_error: float
    alternation_points: np.ndarray
    residual_signs: np.ndarray
    interval: Interval
    method: str = "remez"
    iterations: int = 0
    levelled_error: float = field(default=float("nan"))

    @property
    def degree(self) -> int:
        return self.poly.degree


def eval_local(poly: LocalPolynomial, y):
    """Evaluate ``poly`` at ``y`` by Horner's rule (vectorised over ``y``)."""
    y = np.asarray(y, dtype=float)
    acc = np.full(y.shape, poly.coeffs[-1], dtype=float)
    for a in reversed(poly.coeffs[:-1]):
        acc = acc * y + a
    return acc if acc.ndim else float(acc)


def _local_function(g: RealFunction, interval: Interval) -> Callable[[np.ndarray], np.ndarray]:
    lo, w = interval.lo, interval.width

    def r(y):
        y = np.asarray(y, dtype=float)
        # clamp so rounding never asks g for a point outside the interval
        x = np.clip(lo + w * y, interval.lo, interval.hi)
        return np.asarray(g(x), dtype=float)

    return r


def _dense_grid(d: int) -> np.ndarray:
    """Chebyshev-clustered grid on [-1, 1], fine near the endpoints."""
    m = max(4000, 400 * (d + 2))
    t = -np.cos(np.pi * np.arange(m + 1) / m)
    t[0], t[-1] = -1.0, 1.0
    return t


def _refine_extrema(err, t_grid, idx, rounds=3, points=33):
    """Polish grid extrema of ``|err|`` by repeated local resampling."""
    lo = t_grid[np.maximum(idx - 1, 0)]
    hi = t_grid[np.minimum(idx + 1, len(t_grid) - 1)]
    best_t = t_grid[idx].copy()
    best_e = err(best_t)
    s = np.linspace(0.0, 1.0, points)
    for _ in range(rounds):
        cand = lo[:, None] + (hi - lo)[:, None] * s[None, :]
        vals = err(cand.ravel()).reshape(cand.shape)
        # stay on the same sign lobe as the seed point
        same = np.sign(vals) == np.sign(best_e)[:, None]
        score = np.where(same, np.abs(vals), -np.inf)
        k = np.argmax(score, axis=1)
        rows = np.arange(len(idx))
        t_new = cand[rows, k]
        e_new = vals[rows, k]
        better = np.abs(e_new) > np.abs(best_e)
        best_t = np.where(better, t_new, best_t)
        best_e = np.where(better, e_new, best_e)
        step = (hi - lo) / (points - 1)
        lo = np.maximum(best_t - step, lo)
        hi = np.minimum(best_t + step, hi)
    return best_t, best_e


def _signed_extrema(err, t_grid):
    """One extremum per maximal constant-sign run of ``err`` on the grid."""
    e = err(t_grid)
    sgn = np.sign(e)
    # attach exact zeros to the preceding run so runs stay well defined
    for i in range(1, len(sgn)):
        if sgn[i] == 0:
            sgn[i] = sgn[i - 1]
    if sgn[0] == 0:
        nz = np.flatnonzero(sgn)
        sgn[0] = sgn[nz[0]] if nz.size else 1.0
        for i in range(1, len(sgn)):
            if sgn[i] == 0:
                sgn[i] = sgn[i - 1]
    breaks = np.flatnonzero(np.diff(sgn) != 0) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [len(e)]))
    idx = np.array([s + int(np.argmax(np.abs(e[s:t]))) for s, t in zip(starts, ends)])
    t_ext, e_ext = _refine_extrema(err, t_grid, idx)
    return t_ext, e_ext, float(np.max(np.abs(e)))


def _select_alternant(t_ext, e_ext, npts):
    t = list(t_ext)
    e = list(e_ext)
    while len(t) > npts:
        if len(t) - npts == 1:
            drop = 0 if abs(e[0]) < abs(e[-1]) else len(t) - 1
            del t[drop], e[drop]
            continue
        i = int(np.argmin(np.abs(e)))
        if i in (0, len(t) - 1):
            del t[i], e[i]
            continue
        # removing an interior point leaves two equal-sign neighbours; drop the weaker one
        del t[i], e[i]
        j = i - 1 if abs(e[i - 1]) < abs(e[i]) else i
        del t[j], e[j]
    return np.array(t), np.array(e)


def _single_exchange(t_ref, E, t_star, e_star):
    """Swap the worst grid point into the reference, keeping sign alternation."""
    npts = len(t_ref)
    base = np.sign(E) if E != 0 else 1.0
    signs = base * (-1.0) ** np.arange(npts)
    s_star = np.sign(e_star)
    t = t_ref.copy()
    k = int(np.searchsorted(t, t_star))
    if k < npts and t[k] == t_star:
        return t
    if k == 0:
        if signs[0] == s_star:
            t[0] = t_star
        else:
            t = np.concatenate(([t_star], t[:-1]))
    elif k == npts:
        if signs[-1] == s_star:
            t[-1] = t_star
        else:
            t = np.concatenate((t[1:], [t_star]))
    else:
        t[k - 1 if signs[k - 1] == s_star else k] = t_star
    return t


def _solve_reference(f, t_ref, d):
    npts = d + 2
    A = np.empty((npts, npts))
    A[:, : d + 1] = C.chebvander(t_ref, d)
    A[:, d + 1] = (-1.0) ** np.arange(npts)
    sol = np.linalg.solve(A, f(t_ref))
    return sol[: d + 1], sol[d + 1]


def _shifted_chebyshev_table(d: int) -> list[list[int]]:
    """Integer monomial coefficients of T_k(2y - 1), k = 0..d."""
    rows = [[1], [-1, 2]]
    while len(rows) <= d:
        a, b = rows[-1], rows[-2]
        nxt = [0] * (len(a) + 1)
        # T_{k+1} = 2 (2y - 1) T_k - T_{k-1}
        for v, coef in enumerate(a):
            nxt[v] -= 2 * coef
            nxt[v + 1] += 4 * coef
        for v, coef in enumerate(b):
            nxt[v] -= coef
        rows.append(nxt)
    return rows[: d + 1]


def _to_local(cheb_coeffs) -> LocalPolynomial:
    # exact rational accumulation; only the final rounding of each a_v is inexact
    d = len(cheb_coeffs) - 1
    table = _shifted_chebyshev_table(d)
    acc = [Fraction(0)] * (d + 1)
    for k, ck in enumerate(cheb_coeffs):
        fk = Fraction(float(ck))
        for v, tv in enumerate(table[k]):
            acc[v] += fk * tv
    return LocalPolynomial(tuple(float(a) for a in acc))


def _eval_extended(poly: LocalPolynomial, y):
    y = np.asarray(y, dtype=np.longdouble)
    acc = np.full(y.shape, poly.coeffs[-1], dtype=np.longdouble)
    for a in reversed(poly.coeffs[:-1]):
        acc = acc * y + np.longdouble(a)
    return acc


def _exact_tolerance(fvals) -> float:
    return 64.0 * np.finfo(float).eps * (1.0 + float(np.max(np.abs(fvals))))


def _certify(poly, r, interval, method, iterations, levelled, d):
    """Measure the sup error of ``poly`` itself and extract d+2 alternation points."""
    t_grid = _dense_grid(d)

    def err(t):
        y = 0.5 * (np.asarray(t) + 1.0)
        return (r(y) - _eval_extended(poly, y)).astype(float)

    t_ext, e_ext, grid_max = _signed_extrema(err, t_grid)
    sup_error = max(grid_max, float(np.max(np.abs(e_ext))))
    if method != "exact" and sup_error <= _exact_tolerance(r(0.5 * (t_grid + 1.0))):
        method = "exact"
    if len(t_ext) >= d + 2:
        t_alt, e_alt = _select_alternant(t_ext, e_ext, d + 2)
    else:
        t_alt, e_alt = t_ext, e_ext
    return ApproxCertificate(
        poly=poly,
        sup_error=sup_error,
        alternation_points=0.5 * (t_alt + 1.0),
        residual_signs=np.sign(e_alt),
        interval=interval,
        method=method,
        iterations=iterations,
        levelled_error=levelled,
    )


def remez_minmax(
    g: RealFunction,
    d: int,
    interval: Interval,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> ApproxCertificate:
    """Degree-``d`` min-max polynomial of ``g`` on ``interval`` by Remez exchange.

    Parameters
    ----------
    g : callable
        Vectorised real function, bounded on ``interval``.
    d : int
        Polynomial degree, ``d >= 0``.
    interval : Interval
        Approximation interval; the result lives in its local coordinate.
    tol : float
        Relative spread allowed between the largest and smallest reference
        residual at convergence.
    max_iter : int
        Exchange budget.

    Returns
    -------
    ApproxCertificate

    Raises
    ------
    NonConvergence
        If the reference residuals fail to level within ``max_iter`` steps.
    """
    if d < 0:
        raise DomainError("degree must be non-negative")
    if tol <= 0:
        raise DomainError("tol must be positive")
    if interval.width == 0.0:
        c = float(np.asarray(g(np.array([interval.lo])))[0])
        poly = LocalPolynomial((c,) + (0.0,) * d)
        return ApproxCertificate(poly, 0.0, np.linspace(0, 1, d + 2), np.ones(d + 2),
                                 interval, method="exact")
    r = _local_function(g, interval)

    def f(t):
        return r(0.5 * (np.asarray(t) + 1.0))

    t_grid = _dense_grid(d)
    if np.all(np.abs(f(t_grid) - f(t_grid)[0]) <= _exact_tolerance(f(t_grid))) or d + 1 >= len(t_grid):
        poly = LocalPolynomial((float(f(np.array([0.0]))[0]),) + (0.0,) * d)
        return _certify(poly, r, interval, "exact", 0, 0.0, d)

    npts = d + 2
    # residual levels closer than this are indistinguishable in binary64
    noise = 16 * np.finfo(float).eps * (1.0 + float(np.max(np.abs(f(t_grid)))))
    t_ref = -np.cos(np.pi * np.arange(npts) / (npts - 1))
    best = None
    polish = 0
    spread = gap = np.inf
    for it in range(1, max_iter + 1):
        cheb, E = _solve_reference(f, t_ref, d)

        def err(t, cheb=cheb):
            return f(t) - C.chebval(t, cheb)

        t_ext, e_ext, grid_max = _signed_extrema(err, np.union1d(t_grid, t_ref))
        sup = max(grid_max, float(np.max(np.abs(e_ext))))
        if sup <= _exact_tolerance(f(t_grid)):
            return _certify(_to_local(cheb), r, interval, "exact", it, float(E), d)
        if best is None or sup < best[1]:
            best = (cheb, sup, float(E))
        if len(t_ext) < npts:
            # too few sign changes (typically a degenerate start with E = 0)
            k = int(np.argmax(np.abs(e_ext)))
            t_ref = _single_exchange(t_ref, E, t_ext[k], e_ext[k])
            continue
        t_new, e_new = _select_alternant(t_ext, e_ext, npts)
        gap = np.max(np.abs(e_new)) - np.min(np.abs(e_new))
        spread = gap / np.max(np.abs(e_new))
        t_ref = t_new
        if spread <= tol or gap <= noise:
            # a few extra exchanges are cheap and tighten the level to ~cert_tol
            polish += 1
            if spread <= 0.1 * CERT_TOL or gap <= noise or polish > 3:
                break
    else:
        if not (spread <= tol or gap <= noise):
            raise NonConvergence(
                f"Remez did not level within {max_iter} iterations (spread {spread:.3g}, degree {d})"
            )
    cheb, _, E = best
    return _certify(_to_local(cheb), r, interval, "remez", it, E, d)


def lp_minmax(g: RealFunction, d: int, interval: Interval, grid_size: int = 10_000) -> ApproxCertificate:
    """Discrete min-max fit on a Chebyshev-clustered grid via linear programming.

    Used as the fallback when Remez fails.  The reported ``sup_error`` is
    re-measured on a denser grid, so it certifies the returned polynomial.
    """
    if interval.width == 0.0:
        return remez_minmax(g, d, interval)
    r = _local_function(g, interval)
    t = -np.cos(np.pi * np.arange(grid_size) / (grid_size - 1))
    fv = r(0.5 * (t + 1.0))
    V = C.chebvander(t, d)
    m = len(t)
    ones = np.ones((m, 1))
    A_ub = np.vstack([np.hstack([V, -ones]), np.hstack([-V, -ones])])
    b_ub = np.concatenate([fv, -fv])
    cost = np.zeros(d + 2)
    cost[-1] = 1.0
    bounds = [(None, None)] * (d + 1) + [(0, None)]
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise NonConvergence(f"grid LP failed: {res.message}")
    return _certify(_to_local(res.x[: d + 1]), r, interval, "lp", res.nit, float(res.x[-1]), d)


def minimax_approx(
    g: RealFunction,
    d: int,
    interval: Interval,
    tol: float = 1e-8,
    max_iter: int = 100,
    fallback: bool = True,
) -> ApproxCertificate:
    """Remez with the grid-LP fallback on non-convergence."""
    try:
        return remez_minmax(g, d, interval, tol=tol, max_iter=max_iter)
    except (NonConvergence, np.linalg.LinAlgError):
        if not fallback:
            raise
        return lp_minmax(g, d, interval)


def minmax_deviation(g: RealFunction, d: int, interval: Interval, **kw) -> float:
    return remez_minmax(g, d, interval, **kw).sup_error


def anchor_shift(cert: ApproxCertificate, g: RealFunction, x_j: float) -> LocalPolynomial:
    """Replace the constant coefficient so the polynomial matches ``g`` at ``x_j``.

    ``x_j`` must be the left end of the certificate's interval (``y = 0``).
    """
    if not math.isclose(x_j, cert.interval.lo, rel_tol=1e-12, abs_tol=1e-15):
        raise DomainError(f"anchor {x_j} is not the left endpoint {cert.interval.lo}")
    g0 = float(np.asarray(g(np.array([x_j], dtype=float)))[0])
    return LocalPolynomial((g0,) + cert.poly.coeffs[1:])


def coefficient_bound_ok(poly: LocalPolynomial, grid_size: int = 20_001) -> bool:
    """Check ``|a_v| <= A * 2**(3.5 d)`` for every non-constant coefficient.

    ``A`` is the range of the polynomial over ``[0, 1]``, taken on a dense grid.
    """
    if poly.degree == 0:
        return True
    vals = eval_local(poly, np.linspace(0.0, 1.0, grid_size))
    A = float(np.max(vals) - np.min(vals))
    bound = A * 2.0 ** (3.5 * poly.degree)
    slack = 1e-12 * max(1.0, max(abs(a) for a in poly.coeffs))
    return all(abs(a) <= bound + slack for a in poly.coeffs[1:])
