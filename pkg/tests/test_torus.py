import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tfhe_edge import torus
from tfhe_edge.torus import (
    as_torus_poly,
    bits_to_bytes,
    bits_to_message_poly,
    bytes_to_bits,
    centered,
    decode,
    decode_poly,
    encode,
    encode_poly,
    message_polys_to_bits,
    poly_add,
    poly_neg,
    poly_sub,
)

from conftest import small_params

words = st.integers(min_value=0, max_value=2**32 - 1)


def test_add_small(ps):
    x = np.array([1, 2], dtype=np.uint32)
    y = np.array([3, 4], dtype=np.uint32)
    assert poly_add(x, y, ps).tolist() == [4, 6]


def test_add_wraps(ps):
    x = np.array([2**32 - 1], dtype=np.uint32)
    assert poly_add(x, np.array([1], dtype=np.uint32), ps).tolist() == [0]


def test_neg_basics(ps):
    assert poly_neg(np.array([0], dtype=np.uint32), ps).tolist() == [0]
    assert poly_neg(np.array([1], dtype=np.uint32), ps).tolist() == [2**32 - 1]


@given(st.lists(words, min_size=1, max_size=64))
def test_additive_inverse_and_double_negation(values):
    ps = small_params(16)
    x = np.array(values, dtype=np.uint32)
    assert not poly_add(x, poly_neg(x, ps), ps).any()
    assert np.array_equal(poly_neg(poly_neg(x, ps), ps), x)
    assert np.array_equal(poly_sub(x, x, ps), np.zeros_like(x))


def test_length_mismatch(ps):
    with pytest.raises(ValueError):
        poly_add(np.zeros(2, np.uint32), np.zeros(3, np.uint32), ps)


def test_small_modulus_masks():
    ps = small_params(4, log2_q=8, sigma=2.0**-6)
    x = as_torus_poly([1, 2, 3, 4], ps)
    assert poly_sub(np.zeros(4, np.uint32), x, ps).tolist() == [255, 254, 253, 252]
    assert as_torus_poly([-1, 256, 257, 0], ps).tolist() == [255, 0, 1, 0]


def test_encode(ps):
    assert encode(1, ps) == 2**31
    assert encode(0, ps) == 0
    ps4 = small_params(1024, p=4)
    assert encode(3, ps4) == 3 * 2**30
    with pytest.raises(ValueError):
        encode(2, ps)
    with pytest.raises(ValueError):
        encode(-1, ps)


def test_decode(ps):
    assert decode(2**31, ps) == 1
    assert decode(2**31 + 100, ps) == 1
    assert decode(2**32 - 5, ps) == 0
    assert decode(2**30 - 1, ps) == 0


def test_decode_midpoint_rounds_up(ps):
    assert decode(2**30, ps) == 1
    assert decode(3 * 2**30, ps) == 0


@given(st.integers(0, 3), st.integers(-(2**29) + 1, 2**29 - 1))
def test_decode_tolerates_noise_below_half_delta(m, e):
    ps = small_params(16, p=4)
    assert decode((encode(m, ps) + e) % ps.q, ps) == m


def test_encode_decode_poly(ps, np_rng):
    m = np_rng.integers(0, 2, ps.N)
    assert np.array_equal(decode_poly(encode_poly(m, ps), ps), m)


def test_centered(ps):
    assert centered(0, ps) == 0
    assert centered(2**31 - 1, ps) == 2**31 - 1
    assert centered(2**31, ps) == -(2**31)
    assert centered(2**32 - 1, ps) == -1
    arr = centered(np.array([1, 2**32 - 2], dtype=np.uint32), ps)
    assert arr.tolist() == [1, -2]


def test_bits_to_message_poly_chunks(ps):
    assert len(bits_to_message_poly(np.ones(1024, int), ps)) == 1
    assert len(bits_to_message_poly(np.ones(4096, int), ps)) == 4
    assert len(bits_to_message_poly(np.ones(1025, int), ps)) == 2
    (poly,) = bits_to_message_poly([1], ps)
    assert poly[0] == 1 and not poly[1:].any()


def test_bits_to_message_poly_needs_binary_messages():
    with pytest.raises(ValueError):
        bits_to_message_poly([1, 0], small_params(16, p=4))


def test_message_polys_to_bits_truncates(ps, np_rng):
    bits = np_rng.integers(0, 2, 1500)
    polys = bits_to_message_poly(bits, ps)
    assert np.array_equal(message_polys_to_bits(polys, 1500), bits)


@given(st.binary(max_size=200))
def test_bytes_bits_round_trip(data):
    bits = bytes_to_bits(data)
    assert bits.size == 8 * len(data)
    assert bits_to_bytes(bits) == data


def test_bytes_to_bits_lsb_first():
    assert bytes_to_bits(b"\x01").tolist() == [1, 0, 0, 0, 0, 0, 0, 0]


def test_word_dtype():
    assert torus.WORD is np.uint32
