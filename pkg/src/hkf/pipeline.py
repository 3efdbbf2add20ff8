"""Two-phase denoising pipeline: warm-up learning, then streaming fusion.

Warm-up fits the evolution prior and noise covariances on the first beats
of a record. Afterwards each beat is smoothed in isolation and fused with
the running inter-beat posterior; the model stays frozen except for the
adaptive inter-beat process noise. Two ablations ship alongside: per-beat
smoothing only, and the inter-beat filter applied directly to raw beats.
"""

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .beats import HeartbeatTensor
from .errors import DataError
from .interbeat import (
    InterNoiseEstimator,
    InterState,
    estimate_inter_q,
    init_inter_state,
    inter_update_beat,
)
from .linalg import COV_EIG_FLOOR
from .smoothing import (
    IntraNoiseModel,
    SmoothedBeat,
    default_noise_init,
    em_estimate_noise,
    noise_from_csv,
    noise_to_csv,
    smooth_all_beats,
)
from .taylor import (
    TaylorBasisConfig,
    WindowConfig,
    fit_taylor_prior,
    prior_from_csv,
    prior_to_csv,
)


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for the whole pipeline; defaults match the benchmark setup."""

    order: int = 2
    window_left: int = 1
    window_right: int = 1
    window_weights: tuple = None
    delta_t: float = 1.0
    warmup_beats: int = 20
    em_iters: int = 10
    em_rel_tol: float = 1e-6
    literal_em: bool = False
    alpha: float = 0.9
    q_mode: str = "full"
    seed: int = 0

    def __post_init__(self):
        if self.em_iters < 1:
            raise DataError("invalid config: em_iters must be >= 1")
        if self.warmup_beats < 2:
            raise DataError("invalid config: warmup_beats must be >= 2")

    @property
    def window(self):
        weights = None
        if self.window_weights is not None:
            weights = np.asarray(self.window_weights, dtype=float)
        return WindowConfig(self.window_left, self.window_right, weights)

    @property
    def basis(self):
        return TaylorBasisConfig(order=self.order, delta_t=self.delta_t)


@dataclass(frozen=True)
class HkfModel:
    """Learned patient-specific model: evolution prior, noise covariances,
    and the initial-belief covariance shared by every per-beat filter."""

    prior: object
    intra_noise: IntraNoiseModel
    window: WindowConfig
    basis: TaylorBasisConfig
    warmup_beats: int
    init_cov: np.ndarray


@dataclass
class StreamState:
    """Mutable streaming context carried between consecutive beats."""

    inter: InterState
    estimator: InterNoiseEstimator


def warmup_learn(beats, config):
    """Fit the evolution prior and run EM on the warm-up beats."""
    if beats.num_beats < 2:
        raise DataError("insufficient beats: warm-up needs at least 2")
    window = config.window
    basis = config.basis
    prior = fit_taylor_prior(beats, window, basis)
    init = default_noise_init(beats)
    noise, _ = em_estimate_noise(
        beats,
        prior,
        window,
        config.em_iters,
        init,
        literal=config.literal_em,
        rel_tol=config.em_rel_tol,
    )
    return HkfModel(
        prior=prior,
        intra_noise=noise,
        window=window,
        basis=basis,
        warmup_beats=config.warmup_beats,
        init_cov=init.r.copy(),
    )


def _smooth_single(model, beat):
    path = smooth_all_beats(beat[None, :, :], model.prior, model.intra_noise, model.init_cov)
    return SmoothedBeat(
        means=path.sm_means[0],
        covs=path.sm_covs,
        lag_one=path.lag_one,
        gains=path.s_gains,
    )


def process_beat(model, state, beat, config=None):
    """Denoise one beat and advance the streaming state.

    The first beat (``state is None``) returns its smoothed posterior and
    seeds the inter-beat bank; later beats are smoothed, used to refresh
    the adaptive process noise, and fused.
    """
    beat = np.asarray(beat, dtype=float)
    smoothed = _smooth_single(model, beat)
    if state is None:
        config = config or PipelineConfig()
        state = StreamState(
            inter=init_inter_state(smoothed),
            estimator=InterNoiseEstimator(alpha=config.alpha, mode=config.q_mode),
        )
        return smoothed.means.T.copy(), state
    estimate_inter_q(smoothed, state.inter, smoothed.covs, state.estimator)
    state.inter = inter_update_beat(state.inter, smoothed, state.estimator)
    return state.inter.means.T.copy(), state


def _warmup_slice(noisy, config):
    if config.warmup_beats >= noisy.num_beats:
        raise DataError("insufficient beats: record must exceed warmup_beats")
    return HeartbeatTensor(
        beats=noisy.beats[: config.warmup_beats],
        sample_rate_hz=noisy.sample_rate_hz,
        channel_names=noisy.channel_names,
    )


def denoise_record(noisy, config=None):
    """Warm up on the leading beats, then denoise the whole record in order.

    Warm-up beats are re-processed and emitted so the output tensor aligns
    one-to-one with the input.
    """
    config = config or PipelineConfig()
    model = warmup_learn(_warmup_slice(noisy, config), config)
    return denoise_with_model(noisy, model, config)


def denoise_with_model(noisy, model, config=None):
    """Streaming pass over all beats with an already-learned model."""
    config = config or PipelineConfig()
    path = smooth_all_beats(noisy.beats, model.prior, model.intra_noise, model.init_cov)
    sm_means = path.sm_means  # (N, T, m)
    sm_covs = path.sm_covs    # shared across beats

    out = np.empty_like(noisy.beats)
    out[0] = sm_means[0].T
    state = InterState(means=sm_means[0].copy(), covs=sm_covs.copy(), beat_index=1)
    estimator = InterNoiseEstimator(alpha=config.alpha, mode=config.q_mode)
    for tau in range(1, noisy.num_beats):
        smoothed = SmoothedBeat(
            means=sm_means[tau], covs=sm_covs, lag_one=path.lag_one, gains=path.s_gains
        )
        estimate_inter_q(smoothed, state, sm_covs, estimator)
        state = inter_update_beat(state, smoothed, estimator)
        out[tau] = state.means.T
    return noisy.with_beats(out)


def ks_intra_denoise(noisy, config=None):
    """Ablation: per-beat smoothing only, no inter-beat fusion."""
    config = config or PipelineConfig()
    model = warmup_learn(_warmup_slice(noisy, config), config)
    path = smooth_all_beats(noisy.beats, model.prior, model.intra_noise, model.init_cov)
    return noisy.with_beats(np.transpose(path.sm_means, (0, 2, 1)))


def first_difference_obs_variance(beats_array):
    """White-noise variance estimate per channel: half the sample variance
    of within-beat first differences."""
    diffs = beats_array[:, :, 1:] - beats_array[:, :, :-1]
    return np.maximum(np.var(diffs, axis=(0, 2)) / 2.0, COV_EIG_FLOOR)


def inter_filter_raw(beats_array, obs_variance, config=None):
    """Run the inter-beat filter bank over raw beats with a fixed diagonal
    observation covariance."""
    config = config or PipelineConfig()
    beats_array = np.asarray(beats_array, dtype=float)
    n, m, t_len = beats_array.shape
    r_tiled = np.tile(np.diag(obs_variance), (t_len, 1, 1))

    out = np.empty_like(beats_array)
    out[0] = beats_array[0]
    state = InterState(means=beats_array[0].T.copy(), covs=r_tiled.copy(), beat_index=1)
    estimator = InterNoiseEstimator(alpha=config.alpha, mode=config.q_mode)
    for tau in range(1, n):
        obs = SmoothedBeat(
            means=beats_array[tau].T.copy(),
            covs=r_tiled,
            lag_one=np.zeros_like(r_tiled),
            gains=np.zeros_like(r_tiled),
        )
        estimate_inter_q(obs, state, r_tiled, estimator)
        state = inter_update_beat(state, obs, estimator)
        out[tau] = state.means.T
    return out


def kf_inter_denoise(noisy, config=None):
    """Ablation: the inter-beat filter bank applied to raw noisy beats.

    The observation covariance is a per-channel diagonal estimated from
    first differences over the warm-up portion; process noise adapts as in
    the full pipeline.
    """
    config = config or PipelineConfig()
    warm = noisy.beats[: min(config.warmup_beats, noisy.num_beats)]
    obs_variance = first_difference_obs_variance(warm)
    return noisy.with_beats(inter_filter_raw(noisy.beats, obs_variance, config))


MODEL_PRIOR_FILE = "taylor_prior.csv"
MODEL_Q_FILE = "intra_q.csv"
MODEL_R_FILE = "intra_r.csv"
MODEL_INIT_FILE = "init_cov.csv"
MODEL_CONFIG_FILE = "model.cfg"


def save_model(model, directory):
    """Persist a learned model bundle (prior + noise CSVs + config)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    prior_to_csv(model.prior, directory / MODEL_PRIOR_FILE)
    noise_to_csv(model.intra_noise, directory / MODEL_Q_FILE, directory / MODEL_R_FILE)
    np.savetxt(directory / MODEL_INIT_FILE, model.init_cov, delimiter=",")
    parser = configparser.ConfigParser()
    parser["model"] = {
        "order": str(model.basis.order),
        "delta_t": repr(model.basis.delta_t),
        "window_left": str(model.window.left),
        "window_right": str(model.window.right),
        "window_weights": ",".join(repr(float(w)) for w in model.window.weights),
        "warmup_beats": str(model.warmup_beats),
    }
    with open(directory / MODEL_CONFIG_FILE, "w") as fh:
        parser.write(fh)


def load_model(directory):
    directory = Path(directory)
    parser = configparser.ConfigParser()
    read = parser.read(directory / MODEL_CONFIG_FILE)
    if not read:
        raise DataError(f"invalid model bundle: missing {MODEL_CONFIG_FILE}")
    section = parser["model"]
    basis = TaylorBasisConfig(
        order=section.getint("order"), delta_t=section.getfloat("delta_t")
    )
    weights = np.array([float(w) for w in section["window_weights"].split(",")])
    window = WindowConfig(
        left=section.getint("window_left"),
        right=section.getint("window_right"),
        weights=weights,
    )
    prior = prior_from_csv(directory / MODEL_PRIOR_FILE, delta_t=basis.delta_t)
    noise = noise_from_csv(directory / MODEL_Q_FILE, directory / MODEL_R_FILE)
    init_cov = np.loadtxt(directory / MODEL_INIT_FILE, delimiter=",", ndmin=2)
    return HkfModel(
        prior=prior,
        intra_noise=noise,
        window=window,
        basis=basis,
        warmup_beats=section.getint("warmup_beats"),
        init_cov=init_cov,
    )
