"""Input coercion helpers shared by the estimator API."""

import numpy as np

from .beats import HeartbeatTensor
from .errors import DataError


def as_beats_array(X):
    """Coerce a beat stack to a float64 (N, m, T) array.

    Accepts a :class:`HeartbeatTensor` or any array-like with that layout.
    """
    if isinstance(X, HeartbeatTensor):
        return X.beats
    arr = np.asarray(X, dtype=float)
    if arr.ndim != 3:
        raise DataError("dimension error: expected beats x channels x time")
    if not np.all(np.isfinite(arr)):
        raise DataError("invalid beats: non-finite entries")
    return arr


def wrap_like(X, beats_array):
    """Return ``beats_array`` in the same container type as ``X``."""
    if isinstance(X, HeartbeatTensor):
        return X.with_beats(beats_array)
    return beats_array
