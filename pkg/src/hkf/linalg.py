"""Small dense linear-algebra helpers used throughout the filters."""

import numpy as np

from .errors import NumericalError

# Default eigenvalue floor for covariance matrices produced by estimation steps.
COV_EIG_FLOOR = 1e-9


def sym(a):
    """Symmetrize the last two axes: (A + A^T) / 2."""
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def psd_clamp(a, floor=0.0):
    """Project a symmetric matrix (or stack) onto {eigenvalues >= floor}.

    Spectral projection: eigenvalues below ``floor`` are raised to it,
    eigenvectors are kept. Scalar (1x1) input short-circuits to plain
    ``max`` so the closed-form arithmetic is bit-exact.
    """
    a = np.asarray(a, dtype=float)
    if a.shape[-1] == 1:
        return np.maximum(a, floor)
    w, v = np.linalg.eigh(sym(a))
    w = np.maximum(w, floor)
    return sym(np.einsum("...ik,...k,...jk->...ij", v, w, v))


def diag_clamp(a, floor=0.0):
    """Diagonal-only counterpart of :func:`psd_clamp`: keep the diagonal,
    clamp it elementwise, drop off-diagonal entries."""
    a = np.asarray(a, dtype=float)
    d = np.maximum(np.diagonal(a, axis1=-2, axis2=-1), floor)
    out = np.zeros_like(a)
    idx = np.arange(a.shape[-1])
    out[..., idx, idx] = d
    return out


def min_eig(a):
    """Smallest eigenvalue of a symmetric matrix (or stack)."""
    return np.linalg.eigvalsh(sym(a)).min(axis=-1)


def solve_spd(s, b, context="innovation"):
    """Solve S X = B for symmetric S, mapping singularity to NumericalError."""
    try:
        return np.linalg.solve(s, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular {context} covariance") from exc
