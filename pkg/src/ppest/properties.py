"""Additive distribution properties ``f(p) = sum_i f_i(p_i)``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .exceptions import BadParam, SpecMismatch

__all__ = ["PropertySpec", "builtin_spec", "BUILTIN_PROPERTIES"]


def _entropy(x):
    return -xlogy(x, x)


def _power(a):
    def f(x):
        return np.power(np.asarray(x, dtype=float), a)

    return f


def _distance(q):
    def f(x):
        return np.abs(np.asarray(x, dtype=float) - q)

    return f


def _support(k):
    def f(x):
        return (np.asarray(x, dtype=float) > 0) / k

    return f


def _coverage(m):
    def f(x):
        x = np.asarray(x, dtype=float)
        # log1p(-1) = -inf gives the right limit 1/m at x = 1
        with np.errstate(divide="ignore"):
            return -np.expm1(m * np.log1p(-np.minimum(x, 1.0))) / m

    return f


@dataclass(frozen=True)
class PropertySpec:
    """A family of per-symbol functions with symbol-to-function assignment.

    Parameters
    ----------
    name : str
    k : int
        Alphabet size.
    functions : tuple of callables
        Distinct vectorised functions on ``[0, 1]``.
    assignment : ndarray of int or None
        ``assignment[i]`` indexes ``functions`` for symbol ``i``; ``None``
        means every symbol uses ``functions[0]``.
    bound : float
        Uniform bound ``T_f`` on ``|f_i|``.
    params : dict
        Echo of the constructor parameters.
    """

    name: str
    k: int
    functions: tuple[Callable, ...]
    assignment: np.ndarray | None = None
    bound: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise BadParam(f"alphabet size must be a positive integer, got {self.k!r}")
        if not self.functions:
            raise BadParam("at least one function is required")
        if self.assignment is not None:
            a = np.asarray(self.assignment, dtype=np.int64)
            if a.shape != (self.k,):
                raise SpecMismatch(f"assignment has shape {a.shape}, expected ({self.k},)")
            if a.min() < 0 or a.max() >= len(self.functions):
                raise SpecMismatch("assignment refers to a missing function")
            object.__setattr__(self, "assignment", a)

    @property
    def symmetric(self) -> bool:
        return self.assignment is None

    def function_index(self) -> np.ndarray:
        if self.assignment is None:
            return np.zeros(self.k, dtype=np.int64)
        return self.assignment

    def check_distribution(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.k,):
            raise SpecMismatch(f"distribution has {p.size} entries, property expects k={self.k}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise SpecMismatch("not a probability vector")
        return p

    def evaluate(self, p) -> float:
        """True property value at distribution ``p``."""
        p = self.check_distribution(p)
        idx = self.function_index()
        terms = np.empty(self.k)
        for a, f in enumerate(self.functions):
            sel = idx == a
            if sel.any():
                terms[sel] = f(p[sel])
        return math.fsum(terms)


def _check_k(k):
    if k is None or int(k) != k or k < 1:
        raise BadParam("this property needs a positive integer k")
    return int(k)


def builtin_spec(name: str, k: int, **params) -> PropertySpec:
    """Construct a built-in property.

    ``entropy``; ``power_sum`` (``a`` in (1/2, 1)); ``distance_to_uniformity``;
    ``support_size`` (normalised by ``k``); ``support_coverage`` (``m >= 1``,
    normalised by ``m``); ``l1_distance`` (reference ``q`` in the simplex).
    Hyphenated names are accepted too.
    """
    key = name.replace("-", "_")
    k = _check_k(k)
    if key == "entropy":
        return PropertySpec("entropy", k, (_entropy,), bound=1.0 / math.e, params={})
    if key == "power_sum":
        a = float(params.get("a", 0.75))
        if not 0.5 < a < 1.0:
            raise BadParam(f"power-sum order must lie in (1/2, 1), got {a}")
        return PropertySpec("power_sum", k, (_power(a),), bound=1.0, params={"a": a})
    if key == "distance_to_uniformity":
        return PropertySpec("distance_to_uniformity", k, (_distance(1.0 / k),), bound=1.0, params={})
    if key == "support_size":
        return PropertySpec("support_size", k, (_support(k),), bound=1.0 / k, params={})
    if key == "support_coverage":
        m = params.get("m", 1)
        if int(m) != m or m < 1:
            raise BadParam(f"coverage parameter must be an integer >= 1, got {m}")
        m = int(m)
        return PropertySpec("support_coverage", k, (_coverage(m),), bound=1.0 / m, params={"m": m})
    if key == "l1_distance":
        if "q" not in params:
            raise BadParam("l1_distance needs a reference distribution q")
        q = np.asarray(params["q"], dtype=float)
        if q.shape != (k,) or np.any(q < 0) or abs(q.sum() - 1.0) > 1e-9:
            raise BadParam("q must be a probability vector of length k")
        values, assignment = np.unique(q, return_inverse=True)
        funcs = tuple(_distance(float(v)) for v in values)
        return PropertySpec("l1_distance", k, funcs, assignment=assignment, bound=1.0, params={"q": q.tolist()})
    raise BadParam(f"unknown property {name!r}; choose from {', '.join(BUILTIN_PROPERTIES)}")


BUILTIN_PROPERTIES = (
    "entropy",
    "power_sum",
    "distance_to_uniformity",
    "support_size",
    "support_coverage",
    "l1_distance",
)
