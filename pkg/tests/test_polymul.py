import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfhe_edge.polymul import (
    CacheError,
    FourierKeyCache,
    PrecisionError,
    check_precision,
    dwt_forward,
    dwt_inverse,
    get_plan,
    negacyclic_convolve_exact,
    negacyclic_mul,
    negacyclic_mul_naive,
    negacyclic_mul_real,
    pointwise_mul,
    round_to_torus,
    rrmse,
)
from tfhe_edge.torus import centered

from conftest import small_params


def direct_dwt(f):
    """O(N^2) weighted DFT straight from the definition."""
    N = len(f)
    x = np.arange(N)
    w = np.exp(1j * np.pi * x / N)
    return np.array([np.sum(w * f * np.exp(-2j * np.pi * t * x / N)) for t in range(N)])


def schoolbook(x, y, q):
    """Negacyclic product with Python integers, coefficient by coefficient."""
    N = len(x)
    out = [0] * N
    for i in range(N):
        for j in range(N):
            k = i + j
            if k < N:
                out[k] += int(x[i]) * int(y[j])
            else:
                out[k - N] -= int(x[i]) * int(y[j])
    return [v % q for v in out]


def test_forward_constant_one_matches_direct_sum():
    plan = get_plan(8)
    f = np.ones(8)
    assert np.allclose(dwt_forward(f, plan), direct_dwt(f), atol=1e-12)


def test_forward_zero():
    assert not dwt_forward(np.zeros(16), get_plan(16)).any()


@given(st.lists(st.floats(-1e6, 1e6), min_size=16, max_size=16),
       st.lists(st.floats(-1e6, 1e6), min_size=16, max_size=16))
def test_forward_linear_and_matches_direct(f, g):
    plan = get_plan(16)
    f, g = np.array(f), np.array(g)
    lhs = dwt_forward(f + g, plan)
    assert np.allclose(lhs, dwt_forward(f, plan) + dwt_forward(g, plan), atol=1e-9 * (1 + np.abs(lhs).max()))
    ref = direct_dwt(f)
    assert np.allclose(dwt_forward(f, plan), ref, atol=1e-9 * (1 + np.abs(ref).max()))


def test_forward_centers_torus_words(ps):
    plan = get_plan(4)
    ps4 = small_params(4)
    f = np.array([2**32 - 1, 1, 0, 2**31], dtype=np.uint32)
    assert np.allclose(dwt_forward(f, plan, ps4), direct_dwt(np.array([-1, 1, 0, -(2**31)])))


def test_round_trip_exact(ps, np_rng):
    plan = get_plan(1024)
    f = np_rng.integers(0, 2**32, 1024, dtype=np.uint64).astype(np.uint32)
    back = dwt_inverse(dwt_forward(f, plan, ps), plan)
    assert np.max(np.abs(back - centered(f, ps))) < 0.5
    assert np.array_equal(round_to_torus(back, ps), f)


def test_inverse_zero_and_basis():
    assert not dwt_inverse(np.zeros(8, complex), get_plan(8)).any()
    plan = get_plan(8)
    e3 = np.zeros(8)
    e3[3] = 1
    back = np.floor(dwt_inverse(dwt_forward(e3, plan), plan) + 0.5)
    assert back.tolist() == e3.tolist()


def test_pointwise(np_rng):
    F = np_rng.normal(size=8) + 1j * np_rng.normal(size=8)
    G = np_rng.normal(size=8) + 1j * np_rng.normal(size=8)
    assert np.array_equal(pointwise_mul(F, np.ones(8)), F)
    assert np.allclose(pointwise_mul(F, G), pointwise_mul(G, F))
    assert np.allclose(np.abs(pointwise_mul(F, G)), np.abs(F) * np.abs(G), atol=1e-12)
    with pytest.raises(ValueError):
        pointwise_mul(F, G[:4])


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        dwt_forward(np.zeros(4), get_plan(8))


def test_plan_requires_power_of_two():
    with pytest.raises(ValueError):
        get_plan(12)


def test_times_one_is_identity(ps, np_rng):
    x = np_rng.integers(0, 2**32, 1024, dtype=np.uint64).astype(np.uint32)
    one = np.zeros(1024, np.uint8)
    one[0] = 1
    assert np.array_equal(negacyclic_mul(x, FourierKeyCache(one), get_plan(1024), ps), x)


def test_wraparound_sign():
    ps4 = small_params(4)
    x = np.array([0, 0, 0, 1], dtype=np.uint32)
    y = np.array([0, 1, 0, 0], dtype=np.uint8)
    out = negacyclic_mul(x, FourierKeyCache(y), get_plan(4), ps4)
    assert out.tolist() == [2**32 - 1, 0, 0, 0]
    assert negacyclic_mul_naive(x, y, ps4).tolist() == [2**32 - 1, 0, 0, 0]


def test_hand_expanded_small_modulus():
    ps4 = small_params(4, log2_q=8, sigma=2.0**-6)
    x = np.array([1, 2, 3, 4], dtype=np.uint32)
    y = np.array([1, 1, 0, 0], dtype=np.uint8)
    assert negacyclic_mul_naive(x, y, ps4).tolist() == [253, 3, 5, 7]
    assert negacyclic_mul(x, FourierKeyCache(y), get_plan(4), ps4).tolist() == [253, 3, 5, 7]


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_naive_oracle_matches_schoolbook(data):
    N = data.draw(st.sampled_from([1, 2, 4, 8, 16]))
    ps = small_params(N)
    x = data.draw(st.lists(st.integers(0, 2**32 - 1), min_size=N, max_size=N))
    y = data.draw(st.lists(st.integers(0, 1), min_size=N, max_size=N))
    got = negacyclic_mul_naive(np.array(x, np.uint32), np.array(y, np.uint8), ps)
    assert got.tolist() == schoolbook(x, y, 2**32)


@settings(max_examples=30, deadline=None)
@given(st.data())
def test_transform_matches_oracle_random_sizes(data):
    N = data.draw(st.sampled_from([2, 4, 32, 256, 1024]))
    ps = small_params(N)
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2**32, N, dtype=np.uint64).astype(np.uint32)
    key = rng.integers(0, 2, N).astype(np.uint8)
    fast = negacyclic_mul(x, FourierKeyCache(key), get_plan(N), ps)
    assert np.array_equal(fast, negacyclic_mul_naive(x, key, ps))


def test_worst_case_magnitudes_exact(ps):
    # every coefficient at -2^31 against an all-ones key hits the 2^41 bound
    x = np.full(1024, 2**31, dtype=np.uint32)
    key = np.ones(1024, np.uint8)
    fast = negacyclic_mul(x, FourierKeyCache(key), get_plan(1024), ps)
    assert np.array_equal(fast, negacyclic_mul_naive(x, key, ps))


def test_zero_key(ps, np_rng):
    x = np_rng.integers(0, 2**32, 1024, dtype=np.uint64).astype(np.uint32)
    assert not negacyclic_mul(x, FourierKeyCache(np.zeros(1024, np.uint8)), get_plan(1024), ps).any()


def test_forward_counter_warm_vs_cold(ps, np_rng):
    plan = get_plan(1024)
    key = np_rng.integers(0, 2, 1024).astype(np.uint8)
    x = np_rng.integers(0, 2**32, 1024, dtype=np.uint64).astype(np.uint32)
    cache = FourierKeyCache(key)
    assert not cache.warm
    before = plan.forward_count
    negacyclic_mul(x, cache, plan, ps)
    assert plan.forward_count - before == 2 and cache.warm
    before = plan.forward_count
    negacyclic_mul(x, cache, plan, ps)
    assert plan.forward_count - before == 1


def test_cache_mismatch_and_read_only(np_rng):
    cache = FourierKeyCache(np.ones(8, np.uint8))
    with pytest.raises(CacheError):
        cache.spectrum(get_plan(16))
    sp = cache.spectrum(get_plan(8))
    with pytest.raises(ValueError):
        sp[0] = 0
    with pytest.raises(CacheError):
        negacyclic_mul_real(np.zeros(8, np.uint32), sp, get_plan(8), small_params(8))


def test_precision_guard():
    check_precision(small_params(1024))
    check_precision(small_params(2048))  # 31 + 11 = 42
    with pytest.raises(PrecisionError):
        check_precision(small_params(4096))
    with pytest.raises(PrecisionError):
        negacyclic_mul(np.zeros(4096, np.uint32), FourierKeyCache(np.zeros(4096, np.uint8)),
                       get_plan(4096), small_params(4096))


def test_exact_convolve_large_values_use_python_ints():
    x = np.array([2**40, 0], dtype=np.int64)
    y = np.array([2**30, 2**30], dtype=np.int64)
    out = negacyclic_convolve_exact(x, y)
    assert [int(v) for v in out] == [2**70, 2**70]


def test_rrmse_identities(np_rng):
    X = np_rng.normal(size=64)
    assert rrmse(X, X) == 0.0
    assert rrmse(X, 2 * X) == pytest.approx(1 / math.sqrt(64))
    with pytest.raises(ZeroDivisionError):
        rrmse(np.zeros(4), np.ones(4))
    with pytest.raises(ValueError):
        rrmse(np.ones(4), np.ones(3))


def test_rrmse_transform_precision(ps, np_rng):
    plan = get_plan(1024)
    x = np_rng.integers(0, 2**32, 1024, dtype=np.uint64).astype(np.uint32)
    key = np_rng.integers(0, 2, 1024).astype(np.uint8)
    real = negacyclic_mul_real(x, FourierKeyCache(key), plan, ps)
    exact = negacyclic_convolve_exact(centered(x, ps), key).astype(np.float64)
    assert rrmse(exact, real) <= 1e-6
