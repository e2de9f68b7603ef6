"""Smoothness functionals: effective derivative and local min-max deviation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import DomainError, NonConvergence
from .minimax import ApproxCertificate, Interval, RealFunction, minimax_approx
from .partition import PartitionConfig, approx_interval, locate, locate_many

__all__ = ["effective_derivative", "SmoothnessProfile", "local_profile", "piece_certificates"]


def _grid_size(width: float, resolution: float) -> int:
    # power of two so halving the resolution nests the grids
    return 1 << max(1, math.ceil(math.log2(width / resolution) - 1e-12))


def effective_derivative(
    g: RealFunction,
    h: float,
    interval: Interval,
    resolution: float | None = None,
    max_points: int | None = None,
) -> float:
    """Largest difference quotient ``|g(y) - g(x)| / |y - x|`` over ``|y - x| >= h``.

    Pairs are restricted to an equispaced grid on ``interval`` whose step is at
    most ``resolution`` (default ``min(h/4, |I|/4096)``), so the value is a
    lower approximation of the continuous supremum that increases under grid
    refinement.  ``max_points`` caps the grid size (coarsening the step,
    possibly beyond ``h``) for very wide intervals.

    Only gaps in ``[h, 2h)`` need checking: a longer chord splits into
    shorter admissible chords and its slope is their weighted average.
    """
    if not h > 0:
        raise DomainError("step h must be positive")
    width = interval.width
    if h >= width:
        raise DomainError(f"step {h} is not smaller than the interval width {width}")
    if resolution is None:
        resolution = min(h / 4.0, width / 4096.0)
    N = _grid_size(width, resolution)
    if max_points is not None and N > max_points:
        N = _grid_size(width, width / max_points)
    step = width / N
    x = interval.lo + step * np.arange(N + 1)
    x[-1] = interval.hi
    gx = np.asarray(g(x), dtype=float)
    m0 = max(1, math.ceil(h / step * (1 - 1e-12)))
    best = 0.0
    for m in range(m0, min(2 * m0, N + 1)):
        q = np.abs(gx[m:] - gx[:-m]) / (x[m:] - x[:-m])
        best = max(best, float(q.max()))
    return best


def piece_certificates(cfg: PartitionConfig, g: RealFunction, **kw) -> list[ApproxCertificate]:
    """Min-max certificates of ``g`` on every truncated ``I**_j``, ``j = 1..M_n``."""
    certs = []
    for j in range(1, cfg.M_n + 1):
        try:
            certs.append(minimax_approx(g, cfg.d_n, approx_interval(cfg, j), **kw))
        except NonConvergence as exc:
            exc.piece = j
            raise
    return certs


@dataclass(frozen=True)
class SmoothnessProfile:
    """Per-piece smoothness of ``g`` for one partition.

    Attributes
    ----------
    cfg : PartitionConfig
    Dstar_piece : ndarray
        ``n * D_g(d_n, I**_j)`` for ``j = 1..M_n`` (index 0 is piece 1).
    Lstar_piece : ndarray
        ``L_g(1/n, I**_j)``; zero for pieces narrower than ``2/n``.
    """

    cfg: PartitionConfig
    Dstar_piece: np.ndarray
    Lstar_piece: np.ndarray

    @property
    def Dstar_global(self) -> float:
        return float(np.max(self.Dstar_piece))

    @property
    def Lstar_global(self) -> float:
        return float(np.max(self.Lstar_piece))

    @property
    def Sstar(self) -> float:
        return self.Lstar_global + self.Dstar_global

    def _neighbours(self, x: float) -> slice:
        j = locate(self.cfg, x)
        return slice(max(j - 2, 0), min(j + 1, self.cfg.M_n))

    def Dstar(self, x: float) -> float:
        """``n`` times the largest piece deviation over ``j_x - 1 .. j_x + 1``."""
        return float(np.max(self.Dstar_piece[self._neighbours(x)]))

    def Lstar(self, x: float) -> float:
        return float(np.max(self.Lstar_piece[self._neighbours(x)]))

    def _neighbour_max(self, values, x):
        i = locate_many(self.cfg, x) - 1
        top = self.cfg.M_n - 1
        return np.maximum.reduce([values[np.clip(i + s, 0, top)] for s in (-1, 0, 1)])

    def Dstar_many(self, x) -> np.ndarray:
        return self._neighbour_max(self.Dstar_piece, x)

    def Lstar_many(self, x) -> np.ndarray:
        return self._neighbour_max(self.Lstar_piece, x)


def local_profile(
    cfg: PartitionConfig,
    g: RealFunction,
    certificates: Sequence[ApproxCertificate] | None = None,
    max_points: int | None = None,
) -> SmoothnessProfile:
    """Compute the smoothness profile of ``g``; reuses ``certificates`` if given.

    ``max_points`` is forwarded to :func:`effective_derivative`.
    """
    if certificates is None:
        certificates = piece_certificates(cfg, g)
    if len(certificates) != cfg.M_n:
        raise DomainError(f"expected {cfg.M_n} certificates, got {len(certificates)}")
    h = 1.0 / cfg.n
    D = np.array([cfg.n * c.sup_error for c in certificates])
    L = np.zeros(cfg.M_n)
    for i in range(cfg.M_n):
        iv = approx_interval(cfg, i + 1)
        if iv.width >= 2 * h:
            L[i] = effective_derivative(g, h, iv, max_points=max_points)
    return SmoothnessProfile(cfg, D, L)
