"""Input checks for count arrays."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .exceptions import SpecMismatch


def check_counts(X, name: str = "X", allow_nd: bool = False) -> np.ndarray:
    """Validate a ``(..., 2)`` array of non-negative integer counts and return it as int64.

    Column 0 is the evaluating half ``N1``, column 1 the locating half ``N1'``.
    """
    try:
        X = check_array(X, dtype="numeric", allow_nd=allow_nd, ensure_min_samples=1)
    except ValueError as exc:
        raise SpecMismatch(f"{name}: {exc}") from None
    if X.shape[-1] != 2:
        raise SpecMismatch(f"{name} must have 2 columns (count1, count2), got shape {X.shape}")
    if np.any(X < 0) or np.any(X != np.floor(X)):
        raise SpecMismatch(f"{name} must hold non-negative integer counts")
    return X.astype(np.int64, copy=False)
