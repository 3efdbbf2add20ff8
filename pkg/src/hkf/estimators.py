"""Scikit-learn style estimators wrapping the denoising pipeline.

``fit`` runs the warm-up learning phase on the leading beats of a record;
``transform`` streams over a record and returns the denoised beats. Input
is an (N, m, T) array or a :class:`~hkf.beats.HeartbeatTensor`; output
matches the input container.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import as_beats_array, wrap_like
from .beats import HeartbeatTensor
from .errors import DataError
from .pipeline import (
    PipelineConfig,
    denoise_with_model,
    first_difference_obs_variance,
    inter_filter_raw,
    warmup_learn,
)
from .smoothing import smooth_all_beats


class _WarmupMixin:
    """Shared fit logic: learn the intra-beat model on the warm-up beats."""

    def _config(self):
        return PipelineConfig(
            order=self.order,
            window_left=self.window[0],
            window_right=self.window[1],
            delta_t=self.delta_t,
            warmup_beats=self.warmup_beats,
            em_iters=self.em_iters,
            literal_em=self.literal_em,
            alpha=getattr(self, "alpha", 0.9),
            q_mode=getattr(self, "q_mode", "full"),
        )

    def fit(self, X, y=None):
        beats = as_beats_array(X)
        if beats.shape[0] < self.warmup_beats:
            raise DataError("insufficient beats: fewer than warmup_beats")
        warm = HeartbeatTensor(beats=beats[: self.warmup_beats])
        self.model_ = warmup_learn(warm, self._config())
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before transform")


class HierarchicalKalmanDenoiser(_WarmupMixin, TransformerMixin, BaseEstimator):
    """Full two-stage denoiser: per-beat smoothing plus inter-beat fusion.

    Parameters mirror the pipeline config: Taylor order, transition window
    extents, EM iterations, number of warm-up beats, and the adaptive
    process-noise smoothing factor of the inter-beat stage.
    """

    def __init__(
        self,
        order=2,
        window=(1, 1),
        delta_t=1.0,
        warmup_beats=20,
        em_iters=10,
        literal_em=False,
        alpha=0.9,
        q_mode="full",
    ):
        self.order = order
        self.window = window
        self.delta_t = delta_t
        self.warmup_beats = warmup_beats
        self.em_iters = em_iters
        self.literal_em = literal_em
        self.alpha = alpha
        self.q_mode = q_mode

    def transform(self, X):
        self._check_fitted()
        beats = as_beats_array(X)
        tensor = HeartbeatTensor(beats=beats)
        out = denoise_with_model(tensor, self.model_, self._config())
        return wrap_like(X, out.beats)


class IntraBeatSmoother(_WarmupMixin, TransformerMixin, BaseEstimator):
    """Ablation estimator: stand-alone per-beat smoothing, no fusion."""

    def __init__(
        self,
        order=2,
        window=(1, 1),
        delta_t=1.0,
        warmup_beats=20,
        em_iters=10,
        literal_em=False,
    ):
        self.order = order
        self.window = window
        self.delta_t = delta_t
        self.warmup_beats = warmup_beats
        self.em_iters = em_iters
        self.literal_em = literal_em

    def transform(self, X):
        self._check_fitted()
        beats = as_beats_array(X)
        path = smooth_all_beats(
            beats, self.model_.prior, self.model_.intra_noise, self.model_.init_cov
        )
        return wrap_like(X, np.transpose(path.sm_means, (0, 2, 1)))


class InterBeatKalmanFilter(TransformerMixin, BaseEstimator):
    """Ablation estimator: the inter-beat filter bank on raw beats.

    ``fit`` only estimates the per-channel observation variance from first
    differences over the warm-up beats.
    """

    def __init__(self, warmup_beats=20, alpha=0.9, q_mode="full"):
        self.warmup_beats = warmup_beats
        self.alpha = alpha
        self.q_mode = q_mode

    def fit(self, X, y=None):
        beats = as_beats_array(X)
        self.obs_variance_ = first_difference_obs_variance(beats[: self.warmup_beats])
        return self

    def transform(self, X):
        if not hasattr(self, "obs_variance_"):
            raise NotFittedError("call fit before transform")
        beats = as_beats_array(X)
        config = PipelineConfig(alpha=self.alpha, q_mode=self.q_mode)
        return wrap_like(X, inter_filter_raw(beats, self.obs_variance_, config))
