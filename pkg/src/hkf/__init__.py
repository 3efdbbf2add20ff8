"""Hierarchical Kalman filtering for quasi-periodic multichannel signals.

The package learns a per-record evolution prior and noise covariances from
a warm-up stretch of beats, smooths each beat with an RTS smoother, and
fuses consecutive beats with an adaptive bank of Kalman filters.
"""

from .beats import (
    BeatBoundaries,
    HeartbeatTensor,
    MultiChannelSignal,
    NoiseSpec,
    add_gaussian_noise,
    mse_db,
    reassemble_signal,
    read_onsets,
    read_signal_csv,
    segment_beats,
    write_signal_csv,
)
from .bench import ExperimentReport, run_experiment
from .errors import DataError, HkfError, NumericalError
from .estimators import (
    HierarchicalKalmanDenoiser,
    InterBeatKalmanFilter,
    IntraBeatSmoother,
)
from .interbeat import (
    InterNoiseEstimator,
    InterState,
    estimate_inter_q,
    init_inter_state,
    inter_update_beat,
)
from .pipeline import (
    HkfModel,
    PipelineConfig,
    denoise_record,
    kf_inter_denoise,
    ks_intra_denoise,
    load_model,
    process_beat,
    save_model,
    warmup_learn,
)
from .smoothing import (
    EmStatistics,
    ForwardPass,
    GaussianBelief,
    IntraNoiseModel,
    SmoothedBeat,
    em_estimate_noise,
    kf_forward_beat,
    rts_backward_beat,
    smooth_beat,
)
from .synth import SyntheticEcgSpec, generate_synthetic_ecg
from .taylor import (
    TaylorBasisConfig,
    TaylorPrior,
    WindowConfig,
    basis_row,
    evolution_apply,
    fit_taylor_prior,
)

__version__ = "0.1.0"

__all__ = [
    "BeatBoundaries",
    "DataError",
    "EmStatistics",
    "ExperimentReport",
    "ForwardPass",
    "GaussianBelief",
    "HeartbeatTensor",
    "HierarchicalKalmanDenoiser",
    "HkfError",
    "HkfModel",
    "InterBeatKalmanFilter",
    "InterNoiseEstimator",
    "InterState",
    "IntraBeatSmoother",
    "IntraNoiseModel",
    "MultiChannelSignal",
    "NoiseSpec",
    "NumericalError",
    "PipelineConfig",
    "SmoothedBeat",
    "SyntheticEcgSpec",
    "TaylorBasisConfig",
    "TaylorPrior",
    "WindowConfig",
    "add_gaussian_noise",
    "basis_row",
    "denoise_record",
    "em_estimate_noise",
    "estimate_inter_q",
    "evolution_apply",
    "fit_taylor_prior",
    "generate_synthetic_ecg",
    "init_inter_state",
    "inter_update_beat",
    "kf_forward_beat",
    "kf_inter_denoise",
    "ks_intra_denoise",
    "load_model",
    "mse_db",
    "process_beat",
    "read_onsets",
    "read_signal_csv",
    "reassemble_signal",
    "rts_backward_beat",
    "run_experiment",
    "save_model",
    "segment_beats",
    "smooth_beat",
    "warmup_learn",
    "write_signal_csv",
]
