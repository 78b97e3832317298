import numpy as np
import pytest

from tfhe_edge.params import ParamSet, lvl1_default, validate
from tfhe_edge.rng import GaussianSampler, RandomStream

SEED = bytes(range(32))


@pytest.fixture
def ps():
    return lvl1_default()


@pytest.fixture
def stream():
    return RandomStream(SEED)


@pytest.fixture
def sampler(ps):
    return GaussianSampler.for_params(ps)


@pytest.fixture
def np_rng():
    return np.random.default_rng(12345)


def small_params(N: int, log2_q: int = 32, sigma: float = 2.0**-25, p: int = 2) -> ParamSet:
    return validate(ParamSet(log2_q=log2_q, N=N, sigma=sigma, p=p))


def seed_of(i: int) -> bytes:
    return i.to_bytes(4, "little") * 8
