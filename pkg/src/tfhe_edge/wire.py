"""Binary serialization of parameters, keys and ciphertexts.

Every object is an 18-byte little-endian header followed by a payload whose
length is fully determined by the header::

    magic   4s  b"TSBC"
    version B   1
    kind    B   1=ParamSet 2=TRLWE batch 3=TLWE batch 4=secret key
    log2_q  B
    reserved B  0
    N       H
    p       I
    count   I

Payloads: ParamSet is sigma as a float64 (count = 1); a TRLWE batch is
count x (A, B) with N uint32 words each; a TLWE batch is count x (a, b)
with N + 1 words; a secret key is N bits packed LSB-first (count = 1).
"""

from __future__ import annotations

import dataclasses
import enum
import struct
from collections.abc import Sequence

import numpy as np

from tfhe_edge.lwe import LweSecretKey, TLWECiphertext, TlweBatch
from tfhe_edge.params import ParamError, ParamSet, validate
from tfhe_edge.rlwe import RlweSecretKey, TRLWECiphertext

MAGIC = b"TSBC"
VERSION = 1
HEADER = struct.Struct("<4sBBBBHII")
HEADER_BYTES = HEADER.size  # 18


class Kind(enum.IntEnum):
    PARAMS = 1
    TRLWE_BATCH = 2
    TLWE_BATCH = 3
    SECRET_KEY = 4


class WireError(ValueError):
    """Base class for malformed wire objects."""


class TruncatedError(WireError):
    pass


class BadMagicError(WireError):
    pass


class BadVersionError(WireError):
    pass


class BadKindError(WireError):
    pass


class LengthError(WireError):
    pass


class FormatError(WireError):
    """Header fields or payload values are out of range."""


@dataclasses.dataclass(frozen=True)
class Header:
    kind: Kind
    log2_q: int
    N: int
    p: int
    count: int

    @property
    def q(self) -> int:
        return 1 << self.log2_q

    def pack(self) -> bytes:
        return HEADER.pack(MAGIC, VERSION, int(self.kind), self.log2_q, 0, self.N, self.p, self.count)


def payload_bytes(kind: Kind, N: int, count: int) -> int:
    if kind == Kind.PARAMS:
        return 8
    if kind == Kind.TRLWE_BATCH:
        return 8 * N * count
    if kind == Kind.TLWE_BATCH:
        return 4 * (N + 1) * count
    return -(-N // 8)


def trlwe_bytes(N: int, count: int) -> int:
    return HEADER_BYTES + payload_bytes(Kind.TRLWE_BATCH, N, count)


def tlwe_bytes(N: int, count: int) -> int:
    return HEADER_BYTES + payload_bytes(Kind.TLWE_BATCH, N, count)


def read_header(data: bytes) -> Header:
    if len(data) < HEADER_BYTES:
        raise TruncatedError(f"need {HEADER_BYTES} header bytes, got {len(data)}")
    magic, version, kind, log2_q, _reserved, N, p, count = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadVersionError(f"unsupported version {version}")
    try:
        kind = Kind(kind)
    except ValueError:
        raise BadKindError(f"unknown kind {kind}") from None
    if not 1 <= log2_q <= 32:
        raise FormatError(f"log2_q {log2_q} outside 1..32")
    if N == 0 or N & (N - 1):
        raise FormatError(f"N {N} is not a power of two")
    return Header(kind, log2_q, N, p, count)


def _split(data: bytes, expected: Kind) -> tuple[Header, memoryview]:
    hdr = read_header(data)
    if hdr.kind != expected:
        raise BadKindError(f"expected {expected.name}, got {hdr.kind.name}")
    need = HEADER_BYTES + payload_bytes(hdr.kind, hdr.N, hdr.count)
    if len(data) < need:
        raise TruncatedError(f"object needs {need} bytes, got {len(data)}")
    if len(data) > need:
        raise LengthError(f"{len(data) - need} trailing bytes after object")
    return hdr, memoryview(data)[HEADER_BYTES:need]


def _check_words(words: np.ndarray, log2_q: int) -> None:
    if log2_q < 32 and words.size and int(words.max()) >> log2_q:
        raise FormatError(f"word exceeds q = 2^{log2_q}")


def _header_for(kind: Kind, ps, count: int) -> Header:
    return Header(kind, ps.log2_q, ps.N, ps.p, count)


def serialize_params(ps: ParamSet) -> bytes:
    return _header_for(Kind.PARAMS, ps, 1).pack() + struct.pack("<d", ps.sigma)


def deserialize_params(data: bytes) -> ParamSet:
    hdr, payload = _split(data, Kind.PARAMS)
    if hdr.count != 1:
        raise FormatError(f"ParamSet count must be 1, got {hdr.count}")
    (sigma,) = struct.unpack("<d", payload)
    try:
        return validate(ParamSet(log2_q=hdr.log2_q, N=hdr.N, sigma=sigma, p=hdr.p))
    except ParamError as exc:
        raise FormatError(str(exc)) from exc


def serialize_trlwe_batch(cts: Sequence[TRLWECiphertext], ps) -> bytes:
    for ct in cts:
        if ct.N != ps.N:
            raise ValueError(f"ciphertext has N={ct.N}, expected {ps.N}")
    body = np.empty((len(cts), 2, ps.N), dtype="<u4")
    for j, ct in enumerate(cts):
        body[j, 0] = ct.A
        body[j, 1] = ct.B
    return _header_for(Kind.TRLWE_BATCH, ps, len(cts)).pack() + body.tobytes()


def deserialize_trlwe_batch(data: bytes) -> tuple[list[TRLWECiphertext], Header]:
    hdr, payload = _split(data, Kind.TRLWE_BATCH)
    words = np.frombuffer(payload, dtype="<u4").astype(np.uint32)
    _check_words(words, hdr.log2_q)
    body = words.reshape(hdr.count, 2, hdr.N)
    return [TRLWECiphertext(body[j, 0].copy(), body[j, 1].copy()) for j in range(hdr.count)], hdr


def serialize_tlwe_batch(cts: Sequence[TLWECiphertext] | TlweBatch, ps) -> bytes:
    batch = TlweBatch.from_ciphertexts(cts, ps.N)
    if len(batch) and batch.N != ps.N:
        raise ValueError(f"ciphertexts have N={batch.N}, expected {ps.N}")
    body = np.empty((len(batch), ps.N + 1), dtype="<u4")
    body[:, : ps.N] = batch.a
    body[:, ps.N] = batch.b
    return _header_for(Kind.TLWE_BATCH, ps, len(batch)).pack() + body.tobytes()


def deserialize_tlwe_batch(data: bytes) -> tuple[TlweBatch, Header]:
    hdr, payload = _split(data, Kind.TLWE_BATCH)
    words = np.frombuffer(payload, dtype="<u4").astype(np.uint32)
    _check_words(words, hdr.log2_q)
    body = words.reshape(hdr.count, hdr.N + 1)
    return TlweBatch(body[:, : hdr.N].copy(), body[:, hdr.N].copy()), hdr


def serialize_secret_key(key: RlweSecretKey | LweSecretKey, ps) -> bytes:
    bits = key.S if isinstance(key, RlweSecretKey) else key.s
    if bits.shape != (ps.N,):
        raise ValueError(f"key has {bits.shape[0]} bits, expected {ps.N}")
    packed = np.packbits(bits.astype(np.uint8), bitorder="little").tobytes()
    return _header_for(Kind.SECRET_KEY, ps, 1).pack() + packed


def deserialize_secret_key(data: bytes) -> tuple[RlweSecretKey, Header]:
    hdr, payload = _split(data, Kind.SECRET_KEY)
    if hdr.count != 1:
        raise FormatError(f"secret key count must be 1, got {hdr.count}")
    bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), bitorder="little")
    if bits[hdr.N :].any():
        raise FormatError("nonzero padding bits after the key")
    return RlweSecretKey(bits[: hdr.N]), hdr
