import numpy as np
import pytest

from hkf.beats import HeartbeatTensor, NoiseSpec, add_gaussian_noise
from hkf.linalg import min_eig
from hkf.smoothing import (
    IntraNoiseModel,
    default_noise_init,
    em_estimate_noise,
)
from hkf.synth import SyntheticEcgSpec, generate_synthetic_ecg
from hkf.taylor import TaylorBasisConfig, WindowConfig, fit_taylor_prior

from conftest import zero_prior


def test_one_iteration_matches_hand_calculation():
    # m=1, T=2, one beat, init Q = R = 1, zero prior: every quantity is a
    # few lines of scalar algebra
    y0, y1 = 0.3, -0.8
    beats = HeartbeatTensor(beats=np.array([[[y0, y1]]]))
    init = IntraNoiseModel(q=np.ones((2, 1, 1)), r=np.ones((1, 1)))
    noise, trace = em_estimate_noise(
        beats, zero_prior(2, 1), WindowConfig.uniform(0, 0), 1, init, rel_tol=0.0
    )

    # forward: P0|0 = 0.5; P1|0 = 1.5, K1 = 0.6, P1|1 = 0.6
    # backward: gain = 1/3, sm0 = y0 + 0.2 (y1-y0), sm1 = y0 + 0.6 (y1-y0),
    #           cov0 = 0.4, cov1 = 0.6, lag-one = 0.2
    sm0 = y0 + 0.2 * (y1 - y0)
    sm1 = y0 + 0.6 * (y1 - y0)
    q_expected = (sm1 - sm0) ** 2 + 0.6 - 2 * 0.2 + 0.4
    r_expected = 0.5 * ((y0 - sm0) ** 2 + 0.4 + (y1 - sm1) ** 2 + 0.6)
    assert noise.q[1, 0, 0] == pytest.approx(q_expected, abs=1e-10)
    assert noise.r[0, 0] == pytest.approx(r_expected, abs=1e-10)
    assert len(trace) == 1


def test_literal_mode_equals_corrected_mode_for_zero_prior(rng):
    beats = HeartbeatTensor(beats=rng.standard_normal((4, 2, 12)))
    init = default_noise_init(beats)
    window = WindowConfig.uniform(1, 1)
    corrected, _ = em_estimate_noise(beats, zero_prior(12, 2), window, 3, init, rel_tol=0.0)
    literal, _ = em_estimate_noise(
        beats, zero_prior(12, 2), window, 3, init, literal=True, rel_tol=0.0
    )
    np.testing.assert_allclose(corrected.q, literal.q, atol=1e-12)
    np.testing.assert_allclose(corrected.r, literal.r, atol=1e-12)


def test_observation_noise_recovered_for_static_truth():
    # identity evolution, zero process noise: all variability is observation
    # noise, and EM should attribute it there (the 0.1x-scaled init needs
    # ~25 sweeps to climb to the true level)
    rng = np.random.default_rng(11)
    sigma = 0.4
    n, m, t_len = 100, 2, 50
    template = np.array([1.0, -0.5])
    beats = HeartbeatTensor(
        beats=np.tile(template[None, :, None], (n, 1, t_len))
        + sigma * rng.standard_normal((n, m, t_len))
    )
    noise, _ = em_estimate_noise(
        beats,
        zero_prior(t_len, m),
        WindowConfig.uniform(0, 0),
        25,
        default_noise_init(beats),
        rel_tol=0.0,
    )
    truth = sigma**2 * np.eye(m)
    rel = np.linalg.norm(noise.r - truth) / np.linalg.norm(truth)
    assert rel < 0.15


def test_log_likelihood_is_monotone(rng):
    spec = SyntheticEcgSpec(num_beats=30, beat_length=40, num_channels=2, beat_jitter=0.0, seed=4)
    clean, _ = generate_synthetic_ecg(spec)
    noisy = add_gaussian_noise(clean, NoiseSpec(snr_db=0.0, seed=4))
    prior = fit_taylor_prior(noisy, WindowConfig.uniform(1, 1), TaylorBasisConfig(order=2))
    _, trace = em_estimate_noise(
        noisy, prior, WindowConfig.uniform(0, 0), 15, default_noise_init(noisy), rel_tol=0.0
    )
    assert len(trace) == 15
    assert np.all(np.diff(trace) >= -1e-9)


def test_converged_fixed_point_is_stable():
    # within-beat random walk plus observation noise (the model's own
    # generative form): run to numerical convergence, then one more sweep
    # must not move the parameters
    rng = np.random.default_rng(9)
    n, t_len = 150, 12
    steps = np.concatenate(
        [
            rng.standard_normal((n, 1, 1)),
            np.sqrt(0.3) * rng.standard_normal((n, 1, t_len - 1)),
        ],
        axis=2,
    )
    x = np.cumsum(steps, axis=2)
    beats = HeartbeatTensor(beats=x + np.sqrt(0.5) * rng.standard_normal(x.shape))
    init = default_noise_init(beats)
    window = WindowConfig.uniform(0, 0)
    prior = zero_prior(t_len, 1)
    converged, _ = em_estimate_noise(beats, prior, window, 3000, init, rel_tol=0.0)
    bumped, _ = em_estimate_noise(
        beats, prior, window, 1, converged, rel_tol=0.0, init_belief_cov=init.r
    )
    assert np.max(np.abs(bumped.q - converged.q)) < 1e-9
    assert np.max(np.abs(bumped.r - converged.r)) < 1e-9


def test_em_outputs_are_psd(rng):
    beats = HeartbeatTensor(beats=rng.standard_normal((6, 2, 10)))
    noise, _ = em_estimate_noise(
        beats,
        zero_prior(10, 2),
        WindowConfig.uniform(1, 1),
        5,
        default_noise_init(beats),
        rel_tol=0.0,
    )
    assert np.min(min_eig(noise.q[1:])) >= 1e-9 - 1e-12
    assert np.min(min_eig(noise.r)) >= 1e-9 - 1e-12


def test_early_stop_on_relative_tolerance():
    # identical noiseless beats: the estimates freeze at the eigenvalue
    # floor within a few sweeps, so the relative-change stop must fire
    beats = HeartbeatTensor(beats=np.tile(np.linspace(0.0, 1.0, 8), (10, 1, 1)))
    _, trace = em_estimate_noise(
        beats,
        zero_prior(8, 1),
        WindowConfig.uniform(0, 0),
        200,
        default_noise_init(beats),
        rel_tol=1e-6,
    )
    assert len(trace) < 200
