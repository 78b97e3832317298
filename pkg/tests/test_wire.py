import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfhe_edge import wire
from tfhe_edge.lwe import TLWECiphertext, TlweBatch
from tfhe_edge.params import ParamSet, lvl1_default
from tfhe_edge.rlwe import RlweSecretKey, TRLWECiphertext

from conftest import small_params


def random_trlwe(rng, N, count, log2_q=32):
    hi = 1 << log2_q
    return [
        TRLWECiphertext(
            rng.integers(0, hi, N, dtype=np.uint64).astype(np.uint32),
            rng.integers(0, hi, N, dtype=np.uint64).astype(np.uint32),
        )
        for _ in range(count)
    ]


def test_header_layout(ps):
    data = wire.serialize_trlwe_batch([], ps)
    assert len(data) == wire.HEADER_BYTES == 18
    assert data[:4] == b"TSBC"
    assert struct.unpack("<4sBBBBHII", data) == (b"TSBC", 1, 2, 32, 0, 1024, 2, 0)


def test_size_formulas():
    assert wire.trlwe_bytes(1024, 1) - 18 == 8192
    assert wire.tlwe_bytes(1024, 1024) - 18 == 4_198_400
    assert (wire.tlwe_bytes(1024, 1024) - 18) / (wire.trlwe_bytes(1024, 1) - 18) == 512.5
    assert wire.payload_bytes(wire.Kind.SECRET_KEY, 1024, 1) == 128


def test_trlwe_round_trip(ps, np_rng):
    cts = random_trlwe(np_rng, 1024, 3)
    data = wire.serialize_trlwe_batch(cts, ps)
    assert len(data) == wire.trlwe_bytes(1024, 3)
    back, hdr = wire.deserialize_trlwe_batch(data)
    assert back == cts and hdr.count == 3 and hdr.N == 1024


def test_tlwe_round_trip_and_empty(ps, np_rng):
    a = np_rng.integers(0, 2**32, (5, 1024), dtype=np.uint64).astype(np.uint32)
    b = np_rng.integers(0, 2**32, 5, dtype=np.uint64).astype(np.uint32)
    batch = TlweBatch(a, b)
    back, _ = wire.deserialize_tlwe_batch(wire.serialize_tlwe_batch(batch, ps))
    assert back == batch
    empty = wire.serialize_tlwe_batch([], ps)
    assert len(empty) == 18
    assert len(wire.deserialize_tlwe_batch(empty)[0]) == 0


def test_tlwe_accepts_ciphertext_list(ps):
    cts = [TLWECiphertext(np.arange(1024, dtype=np.uint32), 7)]
    back, _ = wire.deserialize_tlwe_batch(wire.serialize_tlwe_batch(cts, ps))
    assert list(back) == cts


def test_params_round_trip():
    for ps in (lvl1_default(), small_params(16, log2_q=8, sigma=0.01, p=4)):
        assert wire.deserialize_params(wire.serialize_params(ps)) == ps


def test_key_round_trip(ps, np_rng):
    key = RlweSecretKey(np_rng.integers(0, 2, 1024).astype(np.uint8))
    data = wire.serialize_secret_key(key, ps)
    assert len(data) == 18 + 128
    back, _ = wire.deserialize_secret_key(data)
    assert np.array_equal(back.S, key.S)


def test_key_padding_bits_rejected():
    ps = small_params(4)
    data = bytearray(wire.serialize_secret_key(RlweSecretKey(np.ones(4, np.uint8)), ps))
    data[-1] |= 0x80
    with pytest.raises(wire.FormatError):
        wire.deserialize_secret_key(bytes(data))


def test_truncation(ps, np_rng):
    data = wire.serialize_trlwe_batch(random_trlwe(np_rng, 1024, 2), ps)
    for cut in (0, 5, 17, 18, 100, len(data) - 1):
        with pytest.raises(wire.TruncatedError):
            wire.deserialize_trlwe_batch(data[:cut])


def test_trailing_bytes(ps):
    with pytest.raises(wire.LengthError):
        wire.deserialize_trlwe_batch(wire.serialize_trlwe_batch([], ps) + b"\0")


def test_bad_magic_version_kind(ps):
    good = wire.serialize_trlwe_batch([], ps)
    with pytest.raises(wire.BadMagicError):
        wire.deserialize_trlwe_batch(b"XXXX" + good[4:])
    with pytest.raises(wire.BadVersionError):
        wire.deserialize_trlwe_batch(good[:4] + b"\x02" + good[5:])
    with pytest.raises(wire.BadKindError):
        wire.deserialize_trlwe_batch(good[:5] + b"\x09" + good[6:])
    with pytest.raises(wire.BadKindError):
        wire.deserialize_tlwe_batch(good)


def test_bad_header_fields(ps):
    good = wire.serialize_trlwe_batch([], ps)
    with pytest.raises(wire.FormatError):
        wire.deserialize_trlwe_batch(good[:6] + b"\x21" + good[7:])
    with pytest.raises(wire.FormatError):
        wire.deserialize_trlwe_batch(good[:8] + struct.pack("<H", 1000) + good[10:])


def test_words_above_small_q_rejected():
    ps = small_params(4, log2_q=8, sigma=2.0**-6)
    ct = TRLWECiphertext(np.array([1, 2, 3, 4], np.uint32), np.zeros(4, np.uint32))
    data = bytearray(wire.serialize_trlwe_batch([ct], ps))
    data[18 + 1] = 1  # word 0 becomes 257
    with pytest.raises(wire.FormatError):
        wire.deserialize_trlwe_batch(bytes(data))


def test_invalid_params_payload():
    data = wire.serialize_params(lvl1_default())
    with pytest.raises(wire.FormatError):
        wire.deserialize_params(data[:-8] + struct.pack("<d", 2.0**-40))


def test_errors_are_value_errors():
    for cls in (wire.TruncatedError, wire.BadMagicError, wire.BadKindError, wire.LengthError):
        assert issubclass(cls, wire.WireError) and issubclass(cls, ValueError)


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=80))
def test_garbage_never_yields_partial_objects(data):
    for fn in (wire.deserialize_trlwe_batch, wire.deserialize_tlwe_batch,
               wire.deserialize_params, wire.deserialize_secret_key):
        try:
            fn(data)
        except wire.WireError:
            pass


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 5), st.sampled_from([1, 2, 8, 64]), st.integers(1, 32), st.integers(0, 2**32 - 1))
def test_fuzzed_round_trip(count, N, log2_q, seed):
    sigma = 2.0 ** -(log2_q - 1) if log2_q > 1 else 0.5
    ps = ParamSet(log2_q=log2_q, N=N, sigma=sigma, p=2)
    rng = np.random.default_rng(seed)
    cts = random_trlwe(rng, N, count, log2_q)
    back, hdr = wire.deserialize_trlwe_batch(wire.serialize_trlwe_batch(cts, ps))
    assert back == cts and hdr.log2_q == log2_q
