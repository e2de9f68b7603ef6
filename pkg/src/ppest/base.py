"""Estimator objects with the scikit-learn ``fit``/``predict`` protocol."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_counts
from .estimator import (
    SplitHistogram,
    build_piece_table,
    build_property_model,
    estimate_function_many,
    estimate_property,
    property_value,
)
from .exceptions import SpecMismatch
from .partition import PartitionConfig
from .properties import builtin_spec

__all__ = ["FunctionEstimator", "PropertyEstimator"]


class _ConfigMixin:
    def _config(self) -> PartitionConfig:
        return PartitionConfig(
            self.n,
            c=self.c,
            lam=self.lam,
            T=self.T,
            degree_mode=self.degree_mode,
            degree_coef=self.degree_coef,
            degree=self.degree,
        )


class FunctionEstimator(_ConfigMixin, TransformerMixin, BaseEstimator):
    """Estimate ``g(p)`` for each row of split counts ``(N1, N1')``.

    ``fit`` only builds the piece table (it is sample-free), so ``X`` is
    optional there.

    Examples
    --------
    >>> est = FunctionEstimator(lambda x: x, n=10_000, degree=2).fit()
    >>> float(est.predict([[300, 310]])[0])
    0.03
    """

    def __init__(self, g=None, n=1000, c=2.0, lam=0.1, T=None, degree_mode="paper", degree_coef=1.6, degree=None):
        self.g = g
        self.n = n
        self.c = c
        self.lam = lam
        self.T = T
        self.degree_mode = degree_mode
        self.degree_coef = degree_coef
        self.degree = degree

    def fit(self, X=None, y=None):
        if self.g is None:
            raise SpecMismatch("g is required")
        if X is not None:
            check_counts(X)
        self.cfg_ = self._config()
        self.table_ = build_piece_table(self.cfg_, self.g)
        self.profile_ = self.table_.profile()
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "table_")
        X = check_counts(X)
        return estimate_function_many(self.table_, X[:, 0], X[:, 1])

    def transform(self, X) -> np.ndarray:
        return self.predict(X)[:, None]


class PropertyEstimator(_ConfigMixin, BaseEstimator):
    """Additive property estimator on a ``(k, 2)`` split histogram.

    ``fit`` builds the model for ``k = X.shape[0]`` (or ``k`` if given) and
    stores the estimate of ``X`` in ``estimate_``.
    """

    def __init__(
        self,
        property="entropy",
        n=1000,
        k=None,
        params=None,
        c=2.0,
        lam=0.1,
        T=None,
        degree_mode="paper",
        degree_coef=1.6,
        degree=None,
    ):
        self.property = property
        self.n = n
        self.k = k
        self.params = params
        self.c = c
        self.lam = lam
        self.T = T
        self.degree_mode = degree_mode
        self.degree_coef = degree_coef
        self.degree = degree

    def _hist(self, X):
        X = check_counts(X)
        if X.shape[0] != self.spec_.k:
            raise SpecMismatch(f"expected {self.spec_.k} symbols, got {X.shape[0]}")
        return SplitHistogram(X[:, 0], X[:, 1], self.cfg_.n)

    def fit(self, X, y=None):
        X = check_counts(X)
        k = self.k if self.k is not None else X.shape[0]
        self.spec_ = builtin_spec(self.property, k, **(self.params or {}))
        self.cfg_ = self._config()
        self.model_ = build_property_model(self.spec_, self.cfg_)
        self.estimate_ = self.estimate(X)
        return self

    def estimate(self, X, p=None):
        """Full :class:`PropertyEstimate` (value and bounds) for one histogram."""
        check_is_fitted(self, "model_")
        return estimate_property(self.spec_, self.cfg_, self._hist(X), self.model_, p=p)

    def predict(self, X):
        """Point estimate for a ``(k, 2)`` histogram, or an array for a ``(R, k, 2)`` stack."""
        check_is_fitted(self, "model_")
        X = np.asarray(X)
        if X.ndim == 3:
            return np.array([property_value(self.model_, self._hist(h)) for h in X])
        return property_value(self.model_, self._hist(X))
