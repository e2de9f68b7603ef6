"""Sensitivity of the additive estimator and its Laplace-noise private variant."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .estimator import (
    PieceTable,
    PropertyModel,
    build_property_model,
    clip_level,
    estimate_function,
    estimate_property,
)
from .exceptions import BadParam, CapExceeded, NoSolution
from .partition import PartitionConfig, degree_param, raw_index
from .properties import PropertySpec
from .smoothness import SmoothnessProfile, local_profile, piece_certificates

__all__ = [
    "SensitivityReport",
    "PrivacyParams",
    "PrivateEstimate",
    "sensitivity_bound",
    "exhaustive_sensitivity",
    "privatize",
    "laplace_density",
    "private_estimate",
    "complexity_conditions",
    "private_sample_complexity",
    "profile_quantities",
    "MAX_SCAN_N",
]

MAX_SCAN_N = 2**40


@dataclass(frozen=True)
class SensitivityReport:
    """Analytic sensitivity ``4 max_i S*_i / n**(1 - lam)`` and its ingredients.

    ``type1`` and ``type2`` are the separate bounds on moving one count
    inside a piece and on switching pieces; ``exhaustive`` is filled by the
    brute-force oracle when requested.

    The analytic form needs the degree to respect ``d * 2**(4.5 d + 2) <=
    n**lam``; ``certified`` records whether it does.  Otherwise
    :attr:`calibrated` falls back to ``clip_bound = 4T``, which always holds
    because one changed sample moves two clipped terms.
    """

    analytic: float
    type1: float
    type2: float
    n: int
    lam: float
    exhaustive: float | None = None
    certified: bool = True
    clip_bound: float | None = None

    def with_exhaustive(self, value: float) -> "SensitivityReport":
        return replace(self, exhaustive=value)

    @property
    def calibrated(self) -> float:
        """Sensitivity safe to calibrate noise with."""
        if self.certified:
            return self.analytic
        if self.clip_bound is None:
            raise BadParam("degree exceeds the certified range and no clip level was given")
        return self.clip_bound


@dataclass(frozen=True)
class PrivacyParams:
    alpha: float
    noise_scale: float

    @classmethod
    def from_sensitivity(cls, delta: float, alpha: float) -> "PrivacyParams":
        _check_alpha(alpha)
        if delta < 0:
            raise BadParam("sensitivity must be non-negative")
        return cls(alpha, delta / alpha)


def _check_alpha(alpha):
    if not alpha > 0:
        raise BadParam(f"privacy budget alpha must be positive, got {alpha!r}")


def sensitivity_bound(
    cfg: PartitionConfig, profiles: Sequence[SmoothnessProfile], T: float | None = None
) -> SensitivityReport:
    """Analytic sensitivity of the additive estimator from smoothness profiles.

    ``T`` (the clip level) supplies the fallback used when the degree is too
    large for the analytic form.
    """
    n, d, lam = cfg.n, cfg.d_n, cfg.lam
    S = max(p.Sstar for p in profiles)
    L = max(p.Lstar_global for p in profiles)
    D = max(p.Dstar_global for p in profiles)
    growth = 2.0 ** (4.5 * d)
    return SensitivityReport(
        analytic=4.0 * S / n ** (1 - lam),
        type1=d * 2.0 * growth * L / n,
        type2=4.0 * growth * D / n,
        n=n,
        lam=lam,
        certified=d <= degree_param(n, lam),
        clip_bound=None if T is None else 4.0 * T,
    )


def _scan_box(cfg: PartitionConfig) -> tuple[int, int]:
    # past these counts the estimator no longer changes
    top_eval = cfg.clamp_count + 2
    top_locate = math.ceil(cfg.n * cfg.c_n * (cfg.M_n + 5) ** 2) + 2
    return top_eval, top_locate


def _single_moves(table: PieceTable, count_cap: int) -> tuple[float, float]:
    """Largest change from moving one count of ``N1`` and of ``N1'``.

    The estimator depends on ``N1'`` only through its raw piece index, so
    one column per distinct index covers the whole box.
    """
    cfg = table.cfg
    top_eval, top_locate = _scan_box(cfg)
    if (top_eval + 1) * (top_locate + 1) > count_cap:
        raise CapExceeded(
            f"scan box {top_eval + 1} x {top_locate + 1} exceeds count_cap={count_cap}; "
            "use a smaller n or a larger cap"
        )
    index = np.array([raw_index(cfg, t / cfg.n) for t in range(top_locate + 1)])
    first = {}
    for t, j in enumerate(index):
        first.setdefault(int(j), t)
    cols = {
        j: np.array([estimate_function(table, N1, t) for N1 in range(top_eval + 1)])
        for j, t in first.items()
    }
    move_eval = max(float(np.max(np.abs(np.diff(c)))) for c in cols.values())
    move_locate = 0.0
    for a, b in set(zip(index[:-1].tolist(), index[1:].tolist())):
        if a != b:
            move_locate = max(move_locate, float(np.max(np.abs(cols[a] - cols[b]))))
    return move_eval, move_locate


def exhaustive_sensitivity(target: PieceTable | PropertyModel, count_cap: int = 10**6) -> float:
    """Brute-force sensitivity over every adjacent pair of count vectors.

    For a single :class:`PieceTable` this is the largest change from one
    count moving by one.  For a :class:`PropertyModel` a sample may also
    move between two symbols, changing one count down and another up in the
    same half.

    Raises
    ------
    CapExceeded
        If the scanned ``(N1, N1')`` box has more than ``count_cap`` states.
    """
    if isinstance(target, PieceTable):
        return max(_single_moves(target, count_cap))
    moves = [_single_moves(t, count_cap) for t in target.tables]
    mult = np.bincount(target.spec.function_index(), minlength=len(target.tables))
    best = max(max(m) for m in moves)
    for half in (0, 1):
        vals = []
        for m, c in zip(moves, mult):
            vals.extend([m[half]] * int(min(c, 2)))
        vals.sort(reverse=True)
        if len(vals) >= 2:
            best = max(best, vals[0] + vals[1])
    return best


def _uniform_open(rng: np.random.Generator) -> float:
    # u = 0 would give an infinite draw
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def privatize(estimate: float, delta: float, alpha: float, rng: np.random.Generator) -> float:
    """Add ``Laplace(0, delta/alpha)`` noise by inverse CDF of one uniform draw.

    ``delta = 0`` returns ``estimate`` unchanged and consumes no randomness.
    """
    _check_alpha(alpha)
    if delta < 0:
        raise BadParam("sensitivity must be non-negative")
    if delta == 0:
        return estimate
    scale = delta / alpha
    u = _uniform_open(rng)
    return estimate + scale * math.copysign(1.0, u - 0.5) * math.log(1.0 - 2.0 * abs(u - 0.5))


def laplace_density(x, center: float, scale: float):
    x = np.asarray(x, dtype=float)
    return np.exp(-np.abs(x - center) / scale) / (2.0 * scale)


@dataclass(frozen=True)
class PrivateEstimate:
    value: float
    estimate: object
    params: PrivacyParams
    sensitivity: SensitivityReport


def private_estimate(spec, cfg, hist, alpha: float, rng: np.random.Generator, model: PropertyModel | None = None):
    """Estimate the property, then privatise with noise scaled to the calibrated sensitivity."""
    if model is None:
        model = build_property_model(spec, cfg)
    est = estimate_property(spec, cfg, hist, model)
    sens = sensitivity_bound(cfg, model.profiles, T=model.T)
    delta = sens.calibrated
    params = PrivacyParams.from_sensitivity(delta, alpha)
    return PrivateEstimate(privatize(est.value, delta, alpha, rng), est, params, sens)


def profile_quantities(spec: PropertySpec, cfg: PartitionConfig, max_points: int = 2**12):
    """Return ``n -> (T, max_i D*_i, max_i S*_i)`` for ``cfg`` rescaled to ``n`` (memoised)."""
    memo = {}
    funcs = _distinct_functions(spec)
    T = cfg.T if cfg.T is not None else max(clip_level(g) for g in funcs)

    def quantities(n: int):
        if n not in memo:
            c = cfg.with_n(n)
            D = S = 0.0
            for g in funcs:
                prof = local_profile(c, g, piece_certificates(c, g), max_points=max_points)
                D, S = max(D, prof.Dstar_global), max(S, prof.Sstar)
            memo[n] = (T, D, S)
        return memo[n]

    return quantities


def _distinct_functions(spec):
    used = np.unique(spec.function_index())
    return [spec.functions[a] for a in used]


def complexity_conditions(n: int, k: int, eps: float, alpha: float | None, lam: float, T, D, S) -> list[bool]:
    """The sampling conditions at ``n``; ``alpha=None`` drops the privacy one."""
    conds = [
        n**3 >= 4.0 * T / eps,
        20.0 * k * D <= eps * n,
        16.0 * math.sqrt(math.log(12.0)) * S <= eps * n ** (0.5 - lam),
    ]
    if alpha is not None:
        conds.append(S <= alpha * eps * n ** (1 - lam))
    return conds


def private_sample_complexity(
    spec: PropertySpec,
    eps: float,
    alpha: float | None,
    cfg: PartitionConfig,
    quantities: Callable[[int], tuple[float, float, float]] | None = None,
    n_min: int = 2,
    n_max: int = MAX_SCAN_N,
) -> int:
    """Smallest ``n`` meeting all sampling conditions of the private estimator.

    The conditions are ``n**3 >= 4T/eps``, ``n/D* >= 20k/eps``,
    ``n**(1/2 - lam)/S* >= 16 sqrt(ln 12)/eps`` and, unless ``alpha`` is
    ``None``, ``n**(1 - lam)/S* >= 1/(alpha eps)``.  ``D*`` and ``S*`` are the
    largest smoothness values over the property's functions for ``cfg``
    rescaled to ``n``; they are assumed to make the conditions monotone, so
    the scan doubles ``n`` then bisects.

    Raises
    ------
    NoSolution
        If no ``n <= n_max`` (default ``2**40``) qualifies.

    Notes
    -----
    With honest profiles, ``D*`` of a non-smooth function grows like
    ``sqrt(n log n)`` at fixed degree, so the third condition can fail for
    every ``n``; the default oracle then scans to ``n_max`` at real cost.
    """
    if not eps > 0:
        raise BadParam("eps must be positive")
    if alpha is not None:
        _check_alpha(alpha)
    if quantities is None:
        quantities = profile_quantities(spec, cfg)

    def ok(n):
        return all(complexity_conditions(n, spec.k, eps, alpha, cfg.lam, *quantities(n)))

    if ok(n_min):
        return n_min
    lo, hi = n_min, min(2 * n_min, n_max)
    while not ok(hi):
        if hi >= n_max:
            raise NoSolution(f"no n <= {n_max} satisfies the sampling conditions at eps={eps}, alpha={alpha}")
        lo, hi = hi, min(2 * hi, n_max)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
