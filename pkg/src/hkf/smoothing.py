"""Per-beat forward Kalman filter, RTS backward smoother, and EM noise fit.

State and observation share the beat's channel space: the evolution is the
affine prior (identity Jacobian), the observation map is the identity. All
recursions are therefore plain covariance arithmetic, batched across beats
where possible; beats that share an initial covariance also share the whole
covariance path, which the EM loop exploits.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .linalg import COV_EIG_FLOOR, min_eig, psd_clamp, sym
from .taylor import WindowConfig

LOG_2PI = math.log(2.0 * math.pi)


def _check_cov(cov, name, floor=-1e-10):
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DataError(f"invalid {name}: expected a square matrix")
    if not np.all(np.isfinite(cov)):
        raise DataError(f"invalid {name}: non-finite entries")
    if np.max(np.abs(cov - cov.T)) > 1e-10 * max(1.0, np.max(np.abs(cov))):
        raise DataError(f"invalid {name}: not symmetric")
    if min_eig(cov) < floor:
        raise DataError(f"invalid {name}: not positive semidefinite")
    return sym(cov)


@dataclass(frozen=True)
class GaussianBelief:
    """State estimate as a Gaussian: mean vector and PSD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = _check_cov(self.cov, "belief covariance")
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise DataError("invalid belief: mean/covariance dimensions differ")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class IntraNoiseModel:
    """Within-beat noise: per-transition process covariances ``q`` (T x m x m,
    slot 0 unused) and one beat-invariant observation covariance ``r``."""

    q: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.ndim != 3 or q.shape[1] != q.shape[2]:
            raise DataError("invalid process noise: expected T x m x m")
        if not np.all(np.isfinite(q)):
            raise DataError("invalid process noise: non-finite entries")
        if np.min(min_eig(q)) < -1e-8:
            raise DataError("invalid process noise: not positive semidefinite")
        r = _check_cov(self.r, "observation noise")
        if min_eig(r) <= 0:
            raise DataError("invalid observation noise: must be positive definite")
        if r.shape[0] != q.shape[1]:
            raise DataError("invalid noise model: channel counts differ")
        object.__setattr__(self, "q", sym(q))
        object.__setattr__(self, "r", r)

    @property
    def beat_length(self):
        return self.q.shape[0]

    @property
    def num_channels(self):
        return self.r.shape[0]


@dataclass(frozen=True)
class ForwardPass:
    """Forward-filter output for one beat (time-major arrays)."""

    means: np.ndarray            # (T, m) filtered means
    covs: np.ndarray             # (T, m, m) filtered covariances
    pred_means: np.ndarray       # (T, m) one-step predictions
    pred_covs: np.ndarray        # (T, m, m)
    innovations: np.ndarray      # (T, m)
    innovation_covs: np.ndarray  # (T, m, m)
    gains: np.ndarray            # (T, m, m)
    log_likelihood: float


@dataclass(frozen=True)
class SmoothedBeat:
    """RTS output: posteriors given the whole beat, plus smoother gains and
    lag-one cross-covariances (slot 0 of ``lag_one`` unused)."""

    means: np.ndarray    # (T, m)
    covs: np.ndarray     # (T, m, m)
    lag_one: np.ndarray  # (T, m, m)
    gains: np.ndarray    # (T, m, m), slot T-1 unused


class _SharedPath:
    """Forward/backward recursions for a batch of beats that share the
    initial covariance (and hence the whole covariance path)."""

    def __init__(self, ys, prior, noise, init_means, init_cov):
        # ys: (N, T, m); init_means: (N, m); init_cov: (m, m)
        self.ys = ys
        self.prior = prior
        self.noise = noise
        self.init_means = init_means
        self.init_cov = init_cov

    def forward(self):
        ys, noise = self.ys, self.noise
        n, t_len, m = ys.shape
        inc = self.prior.increments
        eye = np.eye(m)

        filt_means = np.empty((n, t_len, m))
        pred_means = np.empty((n, t_len, m))
        innovations = np.empty((n, t_len, m))
        filt_covs = np.empty((t_len, m, m))
        pred_covs = np.empty((t_len, m, m))
        innov_covs = np.empty((t_len, m, m))
        gains = np.empty((t_len, m, m))
        ll_terms = np.empty((t_len, n))

        for t in range(t_len):
            if t == 0:
                pred_mean = self.init_means
                pred_cov = self.init_cov
            else:
                pred_mean = filt_means[:, t - 1] + inc[t]
                pred_cov = filt_covs[t - 1] + noise.q[t]
            s = sym(pred_cov + noise.r)
            try:
                gain = np.linalg.solve(s, pred_cov).T
                s_inv_innov = np.linalg.solve(s, (ys[:, t] - pred_mean).T).T
            except np.linalg.LinAlgError as exc:
                raise NumericalError("singular innovation covariance") from exc
            innov = ys[:, t] - pred_mean
            filt_means[:, t] = pred_mean + innov @ gain.T
            ikh = eye - gain
            filt_covs[t] = sym(ikh @ pred_cov @ ikh.T + gain @ noise.r @ gain.T)
            pred_means[:, t] = pred_mean
            pred_covs[t] = sym(pred_cov)
            innov_covs[t] = s
            gains[t] = gain
            innovations[:, t] = innov
            sign, logdet = np.linalg.slogdet(s)
            if sign <= 0:
                raise NumericalError("singular innovation covariance")
            quad = np.einsum("ni,ni->n", innov, s_inv_innov)
            ll_terms[t] = -0.5 * (m * LOG_2PI + logdet + quad)

        self.filt_means = filt_means
        self.filt_covs = filt_covs
        self.pred_means = pred_means
        self.pred_covs = pred_covs
        self.innovations = innovations
        self.innov_covs = innov_covs
        self.gains = gains
        self.ll_terms = ll_terms
        return self

    def backward(self):
        n, t_len, m = self.ys.shape
        sm_means = np.empty((n, t_len, m))
        sm_covs = np.empty((t_len, m, m))
        s_gains = np.zeros((t_len, m, m))
        lag_one = np.zeros((t_len, m, m))

        sm_means[:, t_len - 1] = self.filt_means[:, t_len - 1]
        sm_covs[t_len - 1] = self.filt_covs[t_len - 1]
        for t in range(t_len - 2, -1, -1):
            try:
                s_gain = np.linalg.solve(self.pred_covs[t + 1], self.filt_covs[t]).T
            except np.linalg.LinAlgError as exc:
                raise NumericalError("singular prediction covariance") from exc
            sm_means[:, t] = self.filt_means[:, t] + (
                sm_means[:, t + 1] - self.pred_means[:, t + 1]
            ) @ s_gain.T
            sm_covs[t] = sym(
                self.filt_covs[t]
                + s_gain @ (sm_covs[t + 1] - self.pred_covs[t + 1]) @ s_gain.T
            )
            s_gains[t] = s_gain
        for t in range(1, t_len):
            lag_one[t] = sm_covs[t] @ s_gains[t - 1].T

        self.sm_means = sm_means
        self.sm_covs = sm_covs
        self.s_gains = s_gains
        self.lag_one = lag_one
        return self


def _beat_array(y):
    y = np.asarray(y, dtype=float)
    if y.ndim != 2:
        raise DataError("invalid beat: expected channels x time")
    return y


def kf_forward_beat(y, prior, noise, init):
    """Forward Kalman filter over one beat (``y`` is channels x time)."""
    y = _beat_array(y)
    path = _SharedPath(
        ys=y.T[None, :, :],
        prior=prior,
        noise=noise,
        init_means=init.mean[None, :],
        init_cov=init.cov,
    ).forward()
    return ForwardPass(
        means=path.filt_means[0],
        covs=path.filt_covs,
        pred_means=path.pred_means[0],
        pred_covs=path.pred_covs,
        innovations=path.innovations[0],
        innovation_covs=path.innov_covs,
        gains=path.gains,
        log_likelihood=math.fsum(path.ll_terms[:, 0]),
    )


def rts_backward_beat(forward, prior, noise):
    """RTS backward pass over a completed forward pass."""
    t_len, m = forward.means.shape
    path = _SharedPath(
        ys=np.zeros((1, t_len, m)),
        prior=prior,
        noise=noise,
        init_means=np.zeros((1, m)),
        init_cov=np.eye(m),
    )
    path.filt_means = forward.means[None, :, :]
    path.filt_covs = forward.covs
    path.pred_means = forward.pred_means[None, :, :]
    path.pred_covs = forward.pred_covs
    path.backward()
    return SmoothedBeat(
        means=path.sm_means[0],
        covs=path.sm_covs,
        lag_one=path.lag_one,
        gains=path.s_gains,
    )


def smooth_beat(y, prior, noise, init):
    """Forward filter then RTS smoother for one beat."""
    return rts_backward_beat(kf_forward_beat(y, prior, noise, init), prior, noise)


def smooth_all_beats(beats_array, prior, noise, init_cov):
    """Smooth every beat of an (N, m, T) stack at once.

    Each beat is initialized at its own first observation with the shared
    ``init_cov``, so the covariance path is computed once for the batch.
    Returns the fitted :class:`_SharedPath` (means are beat-major).
    """
    ys = np.transpose(np.asarray(beats_array, dtype=float), (0, 2, 1))
    path = _SharedPath(
        ys=ys,
        prior=prior,
        noise=noise,
        init_means=ys[:, 0, :].copy(),
        init_cov=np.asarray(init_cov, dtype=float),
    )
    return path.forward().backward()


@dataclass(frozen=True)
class EmStatistics:
    """Beat-averaged posterior moments feeding the covariance updates."""

    xii: np.ndarray   # (T, m, m) second moments E[x x^T]
    xy: np.ndarray    # (T, m, m) E[x] y^T
    yii: np.ndarray   # (T, m, m) y y^T
    xx: np.ndarray    # (T, m, m) E[x_t x_{t-1}^T], slot 0 unused
    mean: np.ndarray  # (T, m) posterior means


def collect_em_statistics(path):
    """Average the E-step moments over the batch held by ``path``."""
    xs = path.sm_means          # (N, T, m)
    ys = path.ys
    n = xs.shape[0]
    xii = np.einsum("nti,ntj->tij", xs, xs) / n + path.sm_covs
    xy = np.einsum("nti,ntj->tij", xs, ys) / n
    yii = np.einsum("nti,ntj->tij", ys, ys) / n
    xx = np.zeros_like(xii)
    xx[1:] = np.einsum("nti,ntj->tij", xs[:, 1:], xs[:, :-1]) / n + path.lag_one[1:]
    return EmStatistics(xii=xii, xy=xy, yii=yii, xx=xx, mean=xs.mean(axis=0))


def _m_step(stats, increments, window, literal):
    t_len = stats.xii.shape[0]
    m = stats.xii.shape[1]
    q_tilde = np.zeros((t_len, m, m))
    for t in range(1, t_len):
        qt = stats.xii[t] - stats.xx[t] - stats.xx[t].T + stats.xii[t - 1]
        if not literal:
            # exact MLE subtracts the deterministic prior increment from the
            # transition residual before forming second moments
            c = increments[t]
            delta = stats.mean[t] - stats.mean[t - 1]
            qt = qt + np.outer(c, c) - np.outer(delta, c) - np.outer(c, delta)
        q_tilde[t] = sym(qt)

    q_hat = np.zeros_like(q_tilde)
    for t in range(1, t_len):
        lo = max(1, t - window.left)
        hi = min(t_len - 1, t + window.right)
        q_hat[t] = q_tilde[lo : hi + 1].mean(axis=0)
    q_hat[1:] = psd_clamp(q_hat[1:], COV_EIG_FLOOR)

    r_tilde = stats.yii - stats.xy - np.swapaxes(stats.xy, -1, -2) + stats.xii
    r_hat = psd_clamp(sym(r_tilde.mean(axis=0)), COV_EIG_FLOOR)
    return q_hat, r_hat


def em_estimate_noise(
    beats, prior, window, iters, init, *, literal=False, rel_tol=1e-6, init_belief_cov=None
):
    """Alternate RTS smoothing (E-step) and covariance MLE (M-step).

    Process covariances stay per-transition but are averaged over the
    window; the observation covariance is tied across the beat. Each beat's
    initial belief (first observation, covariance ``init_belief_cov``,
    defaulting to the init model's R) is held fixed across iterations so
    the likelihood objective does not move. Returns the fitted model and
    the per-iteration innovations log-likelihood trace. ``rel_tol=0``
    disables early stopping.
    """
    if iters < 1:
        raise DataError("invalid EM config: iters must be >= 1")
    window = window if window is not None else WindowConfig.uniform(0, 0)
    beats_array = beats.beats
    init_cov = init.r.copy() if init_belief_cov is None else np.asarray(init_belief_cov, dtype=float)

    q, r = init.q, init.r
    trace = []
    for _ in range(iters):
        path = smooth_all_beats(beats_array, prior, IntraNoiseModel(q=q, r=r), init_cov)
        ll = math.fsum(path.ll_terms.ravel())
        if not np.isfinite(ll):
            raise NumericalError("EM diverged: non-finite log-likelihood")
        trace.append(ll)
        stats = collect_em_statistics(path)
        q, r = _m_step(stats, prior.increments, window, literal)
        if rel_tol > 0 and len(trace) >= 2:
            if abs(trace[-1] - trace[-2]) < rel_tol * max(1.0, abs(trace[-2])):
                break
    return IntraNoiseModel(q=q, r=r), np.asarray(trace)


def default_noise_init(beats):
    """Scale-aware unsupervised starting point for EM: 0.1x the diagonal
    sample variances of the increments (process) and observations (noise)."""
    y = beats.beats
    m = y.shape[1]
    t_len = y.shape[2]
    diff_var = np.var(y[:, :, 1:] - y[:, :, :-1], axis=(0, 2))
    obs_var = np.var(y, axis=(0, 2))
    q0 = np.tile(np.diag(np.maximum(0.1 * diff_var, COV_EIG_FLOOR)), (t_len, 1, 1))
    r0 = np.diag(np.maximum(0.1 * obs_var, COV_EIG_FLOOR))
    if m != r0.shape[0]:  # pragma: no cover - shape guard
        raise DataError("invalid tensor for noise init")
    return IntraNoiseModel(q=q0, r=r0)


def log_likelihood(beats, prior, noise, init_cov):
    """Innovations-form Gaussian log-likelihood of a beat stack."""
    path = smooth_all_beats(beats.beats, prior, noise, init_cov)
    return math.fsum(path.ll_terms.ravel())


def noise_to_csv(noise, q_path, r_path):
    """Write Q as (t, row, col, value) rows and R as (row, col, value) rows."""
    with open(q_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "row", "col", "value"])
        t_len, m, _ = noise.q.shape
        for t in range(t_len):
            for i in range(m):
                for j in range(m):
                    writer.writerow([t, i, j, repr(float(noise.q[t, i, j]))])
    with open(r_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value"])
        m = noise.r.shape[0]
        for i in range(m):
            for j in range(m):
                writer.writerow([i, j, repr(float(noise.r[i, j]))])


def noise_from_csv(q_path, r_path):
    q_rows = []
    with open(q_path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            q_rows.append((int(row[0]), int(row[1]), int(row[2]), float(row[3])))
    if not q_rows:
        raise DataError(f"invalid noise file: {q_path} has no rows")
    t_len = max(r[0] for r in q_rows) + 1
    m = max(r[1] for r in q_rows) + 1
    q = np.zeros((t_len, m, m))
    for t, i, j, value in q_rows:
        q[t, i, j] = value
    r = np.zeros((m, m))
    with open(r_path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            r[int(row[0]), int(row[1])] = float(row[2])
    return IntraNoiseModel(q=q, r=r)
