"""Patient-specific evolution prior from a windowed least-squares Taylor fit.

The within-beat dynamics are modelled as x_t = x_{t-1} + phi(0)^T theta_t,
where theta_t holds per-channel derivative coefficients up to order K. The
coefficients are regressed on first differences of the observed beats,
pooling a small window of neighbouring transitions around each time index.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError

RIDGE_SCALE = 1e-8


@dataclass(frozen=True)
class TaylorBasisConfig:
    """Expansion order K and grid step used by the derivative basis."""

    order: int
    delta_t: float = 1.0

    def __post_init__(self):
        if self.order < 1:
            raise DataError("invalid basis: order must be >= 1")
        if not self.delta_t > 0:
            raise DataError("invalid basis: delta_t must be positive")


@dataclass(frozen=True)
class WindowConfig:
    """Transition window [-left, right] with nonnegative weights summing to 1."""

    left: int
    right: int
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.left < 0 or self.right < 0:
            raise DataError("invalid window: extents must be nonnegative")
        size = self.left + self.right + 1
        weights = self.weights
        if weights is None:
            weights = np.full(size, 1.0 / size)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (size,):
            raise DataError("invalid window: need one weight per offset")
        if np.any(weights < 0):
            raise DataError("invalid window: weights must be nonnegative")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise DataError("invalid window: weights must sum to 1")
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, left, right):
        return cls(left=left, right=right)

    @property
    def size(self):
        return self.left + self.right + 1

    @property
    def offsets(self):
        return np.arange(-self.left, self.right + 1)


def basis_row(offset, basis):
    """Derivative basis evaluated at a window offset.

    Component k is ((offset+1)^k - offset^k) * delta_t^k / k!; offset 0
    recovers the plain Taylor increment weights (delta_t, delta_t^2/2, ...).
    """
    k = np.arange(1, basis.order + 1)
    steps = (float(offset) + 1.0) ** k - float(offset) ** k
    fact = np.array([math.factorial(int(i)) for i in k], dtype=float)
    return steps * basis.delta_t**k / fact


@dataclass(frozen=True)
class TaylorPrior:
    """Fitted evolution coefficients.

    ``theta`` is T x K x m; slot t describes the transition arriving at
    sample t, so slot 0 is unused and kept at zero. ``increments`` caches
    phi(0)^T theta_t per slot and channel.
    """

    theta: np.ndarray
    basis: TaylorBasisConfig
    increments: np.ndarray = field(default=None)

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        if theta.ndim != 3 or theta.shape[1] != self.basis.order:
            raise DataError("invalid prior: theta must be T x K x m")
        if not np.all(np.isfinite(theta)):
            raise DataError("invalid prior: non-finite coefficients")
        increments = np.einsum("tkc,k->tc", theta, basis_row(0, self.basis))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "increments", increments)

    @property
    def beat_length(self):
        return self.theta.shape[0]

    @property
    def num_channels(self):
        return self.theta.shape[2]


def evolution_apply(prior, x, t):
    """Advance a state vector through the transition arriving at sample t.

    Affine with identity Jacobian: returns x + increments[t]. Valid for
    1 <= t <= T-1.
    """
    if not 1 <= t <= prior.beat_length - 1:
        raise DataError(f"index out of range: t={t} not in [1, {prior.beat_length - 1}]")
    return np.asarray(x, dtype=float) + prior.increments[t]


def windowed_ls_loss(prior, beats, window):
    """The windowed least-squares objective the fit minimizes (diagnostics)."""
    y = beats.beats
    diffs = y[:, :, 1:] - y[:, :, :-1]
    t_len = y.shape[2]
    total = 0.0
    for t in range(1, t_len):
        offs, weights = _valid_offsets(t, t_len, window)
        pred = np.stack([basis_row(off, prior.basis) for off in offs]) @ prior.theta[t]
        for j, off in enumerate(offs):
            resid = diffs[:, :, t + off - 1] - pred[j][None, :]
            total += weights[j] * float(np.sum(resid**2))
    return total


def _valid_offsets(t, t_len, window):
    """Window offsets whose transition index stays inside [1, T-1], with
    weights renormalized over the survivors."""
    offs = window.offsets
    keep = (t + offs >= 1) & (t + offs <= t_len - 1)
    offs = offs[keep]
    weights = window.weights[keep]
    total = weights.sum()
    if offs.size == 0 or total <= 0:
        raise DataError("invalid window: no in-range offsets with positive weight")
    return offs, weights / total


def fit_taylor_prior(beats, window, basis):
    """Fit per-transition coefficients by windowed least squares on the
    first differences of the observed beats.

    Each time slot solves its own K x K ridge-regularized normal system,
    shared across beats; channels decouple.
    """
    y = beats.beats
    n, m, t_len = y.shape
    if t_len < basis.order + window.size:
        raise DataError("invalid window: beat length too short for order + window")
    diffs = y[:, :, 1:] - y[:, :, :-1]
    mean_diffs = diffs.mean(axis=0)  # (m, T-1)

    rows = {int(off): basis_row(off, basis) for off in window.offsets}
    theta = np.zeros((t_len, basis.order, m))
    eye = np.eye(basis.order)
    for t in range(1, t_len):
        offs, weights = _valid_offsets(t, t_len, window)
        gram = np.zeros((basis.order, basis.order))
        rhs = np.zeros((basis.order, m))
        for off, w in zip(offs, weights):
            phi = rows[int(off)]
            gram += w * np.outer(phi, phi)
            rhs += w * np.outer(phi, mean_diffs[:, t + off - 1])
        ridge = RIDGE_SCALE * np.trace(gram) / basis.order
        try:
            theta[t] = np.linalg.solve(gram + ridge * eye, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("degenerate fit: singular normal equations") from exc
    return TaylorPrior(theta=theta, basis=basis)


def prior_to_csv(prior, path):
    """Write coefficients as (t, k, channel, theta) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "k", "channel", "theta"])
        t_len, order, m = prior.theta.shape
        for t in range(t_len):
            for k in range(order):
                for c in range(m):
                    writer.writerow([t, k + 1, c, repr(float(prior.theta[t, k, c]))])


def prior_from_csv(path, delta_t=1.0):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            rows.append((int(row[0]), int(row[1]), int(row[2]), float(row[3])))
    if not rows:
        raise DataError(f"invalid prior file: {path} has no rows")
    t_len = max(r[0] for r in rows) + 1
    order = max(r[1] for r in rows)
    m = max(r[2] for r in rows) + 1
    theta = np.zeros((t_len, order, m))
    for t, k, c, value in rows:
        theta[t, k - 1, c] = value
    return TaylorPrior(theta=theta, basis=TaylorBasisConfig(order=order, delta_t=delta_t))
