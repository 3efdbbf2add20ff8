import numpy as np
import pytest

from hkf.beats import HeartbeatTensor
from hkf.smoothing import GaussianBelief, IntraNoiseModel
from hkf.taylor import TaylorBasisConfig, TaylorPrior

from oracles import random_psd


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def make_prior(theta):
    """Prior from raw coefficients; slot 0 is zeroed as unused."""
    theta = np.asarray(theta, dtype=float)
    theta[0] = 0.0
    return TaylorPrior(theta=theta, basis=TaylorBasisConfig(order=theta.shape[1]))


def zero_prior(t_len, m, order=1):
    return make_prior(np.zeros((t_len, order, m)))


def random_instance(rng, m, t_len, q_scale=0.5, r_scale=0.8):
    """Random well-posed smoothing instance: prior, noise, init, data."""
    theta = rng.standard_normal((t_len, 2, m))
    prior = make_prior(theta)
    q = np.zeros((t_len, m, m))
    for t in range(1, t_len):
        q[t] = random_psd(rng, m, q_scale)
    noise = IntraNoiseModel(q=q, r=random_psd(rng, m, r_scale))
    init = GaussianBelief(mean=rng.standard_normal(m), cov=random_psd(rng, m))
    y = rng.standard_normal((m, t_len))
    return prior, noise, init, y


def constant_beats(n, m, t_len, level=1.0):
    return HeartbeatTensor(beats=np.full((n, m, t_len), level))
