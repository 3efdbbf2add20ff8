"""Bank of per-time-index Kalman filters fusing consecutive smoothed beats.

Each of the T intra-beat indices runs its own m-dimensional filter across
beats with identity evolution: consecutive beats are assumed to look alike,
and the smoothed beat (with its posterior covariance as observation noise)
is treated as the measurement. Process noise is re-estimated every beat
from the innovation moments, PSD-clamped, and exponentially smoothed.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .linalg import diag_clamp, psd_clamp, sym


@dataclass(frozen=True)
class InterState:
    """Posterior of the filter bank after some beat: per intra index, mean
    (T x m) and covariance (T x m x m)."""

    means: np.ndarray
    covs: np.ndarray
    beat_index: int

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covs, dtype=float)
        if means.ndim != 2 or covs.shape != (*means.shape, means.shape[1]):
            raise DataError("invalid inter state: means must be T x m, covs T x m x m")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)


def init_inter_state(smoothed):
    """Start the bank from the first smoothed beat's posterior."""
    return InterState(
        means=smoothed.means.copy(), covs=smoothed.covs.copy(), beat_index=1
    )


class InterNoiseEstimator:
    """Adaptive process-noise estimate with exponential smoothing.

    ``mode`` selects how the matrix max{., 0} is realized: ``"full"``
    projects onto the PSD cone spectrally, ``"diagonal"`` clamps diagonal
    entries elementwise and drops the rest. The first estimate seeds the
    running average directly.
    """

    def __init__(self, alpha=0.9, mode="full"):
        if not 0.0 <= alpha < 1.0:
            raise DataError("invalid estimator: alpha must be in [0, 1)")
        if mode not in ("full", "diagonal"):
            raise DataError(f"invalid estimator: unknown mode {mode!r}")
        self.alpha = alpha
        self.mode = mode
        self.q_smoothed = None

    def update(self, q_hat):
        if self.q_smoothed is None:
            self.q_smoothed = q_hat.copy()
        else:
            self.q_smoothed = self.alpha * self.q_smoothed + (1.0 - self.alpha) * q_hat
        return self.q_smoothed


def raw_inter_process_noise(smoothed_means, state, r_ext, mode="full"):
    """Per-index innovation-moment estimate of the beat-to-beat process
    noise, projected to be PSD.

    raw_t = resid resid^T - prior cov_t - observation cov_t, with resid the
    difference between the new smoothed beat and the previous posterior.
    """
    resid = np.asarray(smoothed_means, dtype=float) - state.means
    raw = np.einsum("ti,tj->tij", resid, resid) - state.covs - np.asarray(r_ext, dtype=float)
    if mode == "diagonal":
        return diag_clamp(raw)
    return psd_clamp(sym(raw))


def estimate_inter_q(smoothed, state, r_ext, estimator):
    """Estimate this beat's process noise and fold it into the estimator's
    exponentially smoothed running value, which is returned."""
    q_hat = raw_inter_process_noise(smoothed.means, state, r_ext, estimator.mode)
    return estimator.update(q_hat)


def inter_update_beat(state, smoothed, estimator):
    """One fusion step: for each intra index independently, predict with the
    current smoothed process noise and update on the new smoothed beat."""
    q_bar = estimator.q_smoothed
    if q_bar is None:
        raise DataError("inter update requires a process-noise estimate first")
    sigma_pred = state.covs + q_bar
    s = sym(sigma_pred + smoothed.covs)
    try:
        gains = np.swapaxes(np.linalg.solve(s, sigma_pred), -1, -2)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("singular innovation covariance") from exc
    resid = smoothed.means - state.means
    means = state.means + np.einsum("tij,tj->ti", gains, resid)
    covs = sym(sigma_pred - gains @ sigma_pred)
    return InterState(means=means, covs=covs, beat_index=state.beat_index + 1)


def inter_state_to_csv(state, mean_path, cov_path):
    """Snapshot: (t, channel, mean) rows plus (t, row, col, value) rows."""
    t_len, m = state.means.shape
    with open(mean_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "channel", "mean"])
        for t in range(t_len):
            for c in range(m):
                writer.writerow([t, c, repr(float(state.means[t, c]))])
    with open(cov_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "row", "col", "value"])
        for t in range(t_len):
            for i in range(m):
                for j in range(m):
                    writer.writerow([t, i, j, repr(float(state.covs[t, i, j]))])
