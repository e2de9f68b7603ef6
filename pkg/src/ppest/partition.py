"""Quadratic covering of the unit interval and the polynomial degree schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import BadParam, DomainError
from .minimax import Interval

__all__ = [
    "PartitionConfig",
    "degree_param",
    "practical_degree",
    "interval_I",
    "interval_Istar",
    "interval_Idstar",
    "approx_interval",
    "locate",
    "raw_index",
    "raw_index_many",
    "locate_many",
]


def degree_param(n: float, lam: float) -> int:
    """Largest ``d`` with ``d * 2**(4.5 d + 2) <= n**lam``."""
    if n < 2:
        raise BadParam("n must be at least 2")
    if not 0.0 < lam <= 0.25:
        raise BadParam("lambda must lie in (0, 1/4]")
    log_budget = lam * math.log2(n)
    d = 0
    # compare in log2 so n = 2**60 does not overflow anything
    while math.log2(d + 1) + 4.5 * (d + 1) + 2 <= log_budget + 1e-12:
        d += 1
    return d


def practical_degree(n: float, coef: float = 1.6) -> int:
    return max(0, int(math.floor(coef * math.log(n))))


@dataclass(frozen=True)
class PartitionConfig:
    """Sampling parameter and interval constants for one per-half Poisson mean ``n``.

    ``degree_mode="paper"`` uses :func:`degree_param`; ``"practical"`` uses
    ``floor(degree_coef * ln n)`` for all n; an explicit ``degree`` overrides both.
    """

    n: int
    c: float = 2.0
    lam: float = 0.1
    T: float | None = None
    degree_mode: str = "paper"
    degree_coef: float = 1.6
    degree: int | None = None
    c_n: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise BadParam(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not self.c > 0:
            raise BadParam("c must be positive")
        if self.c_n is None:
            object.__setattr__(self, "c_n", self.c * math.log(self.n) / self.n)
        else:
            # width given directly: keep c consistent with it
            object.__setattr__(self, "c", self.c_n * self.n / math.log(self.n))
        if not 0.0 < self.lam <= 0.25:
            raise BadParam("lambda must lie in (0, 1/4]")
        if self.T is not None and not self.T > 0:
            raise BadParam("T must be positive")
        if self.degree_mode not in ("paper", "practical"):
            raise BadParam(f"unknown degree mode {self.degree_mode!r}")
        if self.degree is not None and self.degree < 0:
            raise BadParam("degree must be non-negative")
        if not 0.0 < self.c_n <= 1.0:
            raise BadParam(f"c*ln(n)/n = {self.c_n:.4g} must lie in (0, 1]")

    @property
    def M_n(self) -> int:
        m = math.ceil(1.0 / math.sqrt(self.c_n))
        # guard against sqrt rounding when 1/sqrt(c_n) is (nearly) an integer
        while m > 1 and self.c_n * (m - 1) ** 2 >= 1.0:
            m -= 1
        while self.c_n * (m * m) < 1.0:
            m += 1
        return m

    @property
    def d_n(self) -> int:
        if self.degree is not None:
            return int(self.degree)
        if self.degree_mode == "practical":
            return practical_degree(self.n, self.degree_coef)
        return degree_param(self.n, self.lam)

    @property
    def clamp_count(self) -> int:
        """Largest first-half count fed to the top piece polynomial."""
        return int(round(self.n * self.c_n * (self.M_n + 2) ** 2))

    @classmethod
    def from_width(cls, n: int, c_n: float, **kw) -> "PartitionConfig":
        return cls(n, c_n=c_n, **kw)

    def with_n(self, n: int) -> "PartitionConfig":
        return PartitionConfig(n, self.c, self.lam, self.T, self.degree_mode, self.degree_coef, self.degree)


def interval_I(cfg: PartitionConfig, j: int) -> Interval:
    if j < 1:
        raise DomainError("interval index starts at 1")
    return Interval(cfg.c_n * (j - 1) ** 2, cfg.c_n * (j * j))


def interval_Istar(cfg: PartitionConfig, j: int) -> Interval:
    if j < 1:
        raise DomainError("interval index starts at 1")
    lo = (j - 2) ** 2 if j >= 2 else 0
    return Interval(cfg.c_n * lo, cfg.c_n * (j + 1) ** 2)


def interval_Idstar(cfg: PartitionConfig, j: int) -> Interval:
    if j < 1:
        raise DomainError("interval index starts at 1")
    lo = (j - 3) ** 2 if j >= 3 else 0
    return Interval(cfg.c_n * lo, cfg.c_n * (j + 2) ** 2)


def approx_interval(cfg: PartitionConfig, j: int) -> Interval:
    """``I**_j`` cut at 1: the set of probabilities the j-th polynomial must fit."""
    full = interval_Idstar(cfg, j)
    return Interval(full.lo, min(full.hi, 1.0))


def raw_index(cfg: PartitionConfig, x: float) -> int:
    """Index j with ``x`` in ``[c_n (j-1)^2, c_n j^2)``, not capped at ``M_n``."""
    if x < 0:
        raise DomainError(f"negative frequency {x}")
    j = int(math.floor(math.sqrt(x / cfg.c_n))) + 1
    while j > 1 and cfg.c_n * (j - 1) ** 2 > x:
        j -= 1
    while cfg.c_n * (j * j) <= x:
        j += 1
    return j


def locate(cfg: PartitionConfig, x: float) -> int:
    """Index of the partition interval containing ``x`` (last interval closed)."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"locate expects x in [0, 1], got {x}")
    return min(raw_index(cfg, x), cfg.M_n)


def raw_index_many(cfg: PartitionConfig, x) -> np.ndarray:
    """Vectorised :func:`raw_index`."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("negative frequency")
    j = np.floor(np.sqrt(x / cfg.c_n)).astype(np.int64) + 1
    j = np.where((j > 1) & (cfg.c_n * ((j - 1) * (j - 1)) > x), j - 1, j)
    j = np.where(cfg.c_n * (j * j) <= x, j + 1, j)
    return j


def locate_many(cfg: PartitionConfig, x) -> np.ndarray:
    """Vectorised :func:`locate`."""
    x = np.asarray(x, dtype=float)
    if np.any((x < 0) | (x > 1)):
        raise DomainError("locate expects frequencies in [0, 1]")
    return np.minimum(raw_index_many(cfg, x), cfg.M_n)
